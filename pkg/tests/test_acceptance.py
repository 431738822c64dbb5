"""Exit criteria. Each test prints one PASS/FAIL line (also listed in the pytest summary)."""
import time

import numpy as np
import pytest

from clickstat import reproduce
from clickstat.cli import main
from conftest import ACCEPTANCE_LINES


def record(check):
    line = check.line()
    print(line)
    ACCEPTANCE_LINES.append(line)
    return check


def test_1_conditioned_antibunching(acceptance_ctx):
    c = record(reproduce.check_conditioned_antibunching(acceptance_ctx))
    v = c.values
    assert (1 - v["g2_0"]) / v["g2_0_err"] >= 3
    assert 0.2 <= v["g2_0"] <= 0.6
    assert abs(v["side_mean"] - 1.0) <= 0.10
    assert c.passed


def test_2_flux_ordering(acceptance_ctx):
    c = record(reproduce.check_flux_ordering(acceptance_ctx))
    assert c.values["g2_0_flux3"] < c.values["g2_0_flux10"]
    assert c.passed


def test_3_transit_peaks(acceptance_ctx):
    c = record(reproduce.check_transit_peaks(acceptance_ctx))
    res, _, _ = acceptance_ctx.conditioned
    for sign in (1, -1):
        g1, e1 = res.at(sign)
        gw, ew = res.at(sign * reproduce.W)
        assert g1 - gw >= 2 * np.hypot(e1, ew)
    assert c.passed


def test_4_pulsed_oscillation(acceptance_ctx):
    c = record(reproduce.check_pulsed_oscillation(acceptance_ctx))
    assert abs(c.values["period_ns"] - 5000) <= 500
    assert c.values["fraction_below"] == 1.0
    assert c.values["g2_tau0"] > 1
    assert c.passed


def test_5_continuous_contrast(acceptance_ctx):
    c = record(reproduce.check_continuous_contrast(acceptance_ctx))
    h = acceptance_ctx.g2tau_continuous
    assert np.abs(h.center_offsets).max() == 50_000
    assert not np.any(h.g2 < 1 - 3 * h.stderr)
    assert c.passed


def test_6_phase_bound(acceptance_ctx):
    c = record(reproduce.check_phase_bound(acceptance_ctx))
    assert np.pi / 45 <= c.values["phi"] <= np.pi / 38
    assert c.passed


def test_7_oracle_equivalence(acceptance_ctx):
    t0 = time.perf_counter()
    c = record(reproduce.check_oracles(acceptance_ctx, n_cases=100))
    assert time.perf_counter() - t0 < 10
    assert c.values["n_cases"] >= 100
    assert c.passed


def test_8_statistical_soundness(acceptance_ctx):
    c = record(reproduce.check_statistics(acceptance_ctx))
    assert c.values["poisson_fraction"] >= 0.99
    assert c.values["ks_p"] > 0.01 and c.values["chi2_p"] > 0.01
    assert c.passed


def test_9_reproduce_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["reproduce", str(a), "--seed", "20020717"]) == 0
    assert main(["reproduce", str(b), "--seed", "20020717"]) == 0
    capsys.readouterr()
    report = (a / "report.txt").read_text()
    assert report == (b / "report.txt").read_text()
    for name in ("g2tau_pulsed.csv", "g2tau_continuous.csv", "g2tau_hbt.csv", "g2dn.csv", "phase_hist.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name
    assert "measured g2(dN=0) = " in report and "+-" in report
    assert report.count("[PASS]") == len(reproduce.CHECKS)
    line = f"[PASS] 9 reproduce determinism: two runs with seed 20020717 gave identical reports, exit 0"
    print(line)
    ACCEPTANCE_LINES.append(line)
