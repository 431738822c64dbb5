import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from clickstat.core import MS, S, US, ClickStream, PumpSchedule
from clickstat.correlator import (
    CorrelationHistogram,
    EmptyStream,
    InsufficientRange,
    MismatchedRecordLength,
    bin_index,
    g2_tau,
    g2_tau_bruteforce,
    oscillation_summary,
)
from clickstat.simulator import add_background, make_rng, simulate


def pairs_at(h, tau):
    return int(h.raw_pairs[h.center_offsets == tau][0])


def test_two_clicks():
    s = ClickStream([0, 3 * US], 100 * US)
    h = g2_tau(s, s, bin_width=US, max_tau=5 * US)
    assert pairs_at(h, 3 * US) == 1 and pairs_at(h, -3 * US) == 1
    assert h.raw_pairs.sum() == 2


def test_three_clicks_enumerated():
    # ordered pairs: (0,1),(1,2) -> +1us; (1,0),(2,1) -> -1us; (0,2) -> +2us; (2,0) -> -2us
    s = ClickStream([0, US, 2 * US], 100 * US)
    for fn in (g2_tau, g2_tau_bruteforce):
        h = fn(s, s, bin_width=US, max_tau=3 * US)
        assert h.center_offsets.tolist() == [k * US for k in range(-3, 4)]
        assert h.raw_pairs.tolist() == [0, 1, 2, 0, 2, 1, 0]


def test_bins_centred_with_half_open_edges():
    w = 1000
    assert bin_index(np.array([1, 500, 501, 1500, 1501]), w).tolist() == [0, 0, 1, 1, 2]
    assert bin_index(np.array([-1, -500, -501, -1500, -1501]), w).tolist() == [0, 0, -1, -1, -2]


def test_outer_bins_filled_over_full_width():
    # max_tau 3 us -> outermost bin centred on 3 us covers (2.5, 3.5] us
    s = ClickStream([0, 3400], 100 * US)
    h = g2_tau(s, s, bin_width=US, max_tau=3 * US)
    assert pairs_at(h, 3 * US) == 1


def test_zero_lag_pairs_excluded():
    s = ClickStream([10, 10, 10], 100 * US)
    h = g2_tau(s, s, bin_width=US, max_tau=2 * US)
    assert h.raw_pairs.sum() == 0


def test_normalization_formula():
    s = ClickStream([0, 3 * US], 100 * US)
    h = g2_tau(s, s, bin_width=US, max_tau=5 * US)
    T = 100 * US
    i = np.flatnonzero(h.center_offsets == 3 * US)[0]
    exp = 2 * 2 * US * (T - 3 * US) / T**2
    assert h.g2[i] == pytest.approx(1 / exp)
    assert h.stderr[i] == pytest.approx(1 / exp)


def test_errors():
    one = ClickStream([5], 100)
    two = ClickStream([5, 7], 100)
    for fn in (g2_tau, g2_tau_bruteforce):
        with pytest.raises(EmptyStream):
            fn(one, one, 1, 10)
        with pytest.raises(EmptyStream):
            fn(ClickStream.empty(100), ClickStream.empty(100), 1, 10)
        with pytest.raises(MismatchedRecordLength):
            fn(two, ClickStream([5, 7], 101), 1, 10)
        with pytest.raises(ValueError):
            fn(two, two, 0, 10)


def test_poisson_stream_is_flat():
    s = add_background(ClickStream.empty(60 * S), 1e4, make_rng(5))
    h = g2_tau(s, s, bin_width=US, max_tau=MS)
    assert np.mean(np.abs(h.g2 - 1) <= 3 * h.stderr) >= 0.99
    # mirrored halves are identical, so average the independent positive half
    pos = h.center_offsets > 0
    assert abs(h.g2[pos].mean() - 1) < 3 * np.sqrt(np.mean(h.stderr[pos] ** 2) / pos.sum())


@st.composite
def small_streams(draw, max_size=400):
    T = draw(st.integers(20 * US, 2 * MS))
    ts = draw(st.lists(st.integers(0, T - 1), min_size=2, max_size=max_size))
    return ClickStream(sorted(ts), T)


@settings(max_examples=150, deadline=None)
@given(small_streams(), st.sampled_from([1, 3, 250, 500, 1000]), st.integers(1, 60))
def test_auto_matches_bruteforce(s, w, nbins):
    max_tau = w * nbins
    fast = g2_tau(s, s, w, max_tau)
    slow = g2_tau_bruteforce(s, s, w, max_tau)
    assert np.array_equal(fast.raw_pairs, slow.raw_pairs)
    np.testing.assert_array_equal(fast.g2, slow.g2)
    # auto-correlation symmetry
    assert np.array_equal(fast.raw_pairs, fast.raw_pairs[::-1])


@settings(max_examples=100, deadline=None)
@given(st.data(), st.sampled_from([7, 500]), st.integers(1, 30))
def test_cross_matches_bruteforce(data, w, nbins):
    T = data.draw(st.integers(20 * US, 500 * US))
    a = ClickStream(sorted(data.draw(st.lists(st.integers(0, T - 1), min_size=2, max_size=200))), T)
    b = ClickStream(sorted(data.draw(st.lists(st.integers(0, T - 1), min_size=2, max_size=200))), T)
    fast = g2_tau(a, b, w, w * nbins)
    slow = g2_tau_bruteforce(a, b, w, w * nbins)
    assert np.array_equal(fast.raw_pairs, slow.raw_pairs)


def test_bruteforce_at_oracle_scale():
    rng = make_rng(9)
    T = 10 * MS
    s = ClickStream(np.sort(rng.integers(0, T, 10_000)), T)
    assert np.array_equal(g2_tau(s, s).raw_pairs, g2_tau_bruteforce(s, s).raw_pairs)


def test_chunking_does_not_change_result(monkeypatch):
    import clickstat.correlator as c
    s = add_background(ClickStream.empty(S), 2e4, make_rng(1))
    ref = g2_tau(s, s)
    monkeypatch.setattr(c, "_CHUNK", 1000)
    assert np.array_equal(g2_tau(s, s).raw_pairs, ref.raw_pairs)


def test_ten_million_clicks_sliding_window():
    s = add_background(ClickStream.empty(600 * S), 1e7 / 600, make_rng(2))
    t0 = time.perf_counter()
    h = g2_tau(s, s)
    elapsed = time.perf_counter() - t0
    assert len(s) > 9_900_000
    # ~1.7e7 pairs in the window; a quadratic method would need ~1e14 comparisons
    assert elapsed < 30
    assert abs(np.mean(h.g2) - 1) < 0.01


def test_csv_format():
    s = ClickStream([0, 3 * US], 100 * US)
    text = g2_tau(s, s, US, 2 * US).to_csv({"bin_width_ns": US})
    lines = text.splitlines()
    assert lines[0] == "# bin_width_ns=1000"
    assert lines[1] == "tau_ns,g2,stderr,raw_pairs"
    assert len(lines) == 2 + 5
    assert lines[2].split(",")[0] == "-2000"


# --- oscillation summary ----------------------------------------------------

SCHED = PumpSchedule(5 * US, 2 * US)


def flat_histogram(value=1.0, w=500, max_tau=50 * US):
    M = max_tau // w
    centers = np.arange(-M, M + 1) * w
    ones = np.full(centers.size, value)
    return CorrelationHistogram(w, centers, ones, np.full(centers.size, 10_000),
                                ones * 0.01, 60 * S, 100, 100)


def test_flat_histogram_has_no_minima_below_one():
    summ = oscillation_summary(flat_histogram(), SCHED)
    assert np.all(summ.min_g2 == 1.0)
    assert summ.fraction_minima_below_1 == 0.0
    assert summ.g2_at_zero == 1.0


def test_insufficient_range():
    with pytest.raises(InsufficientRange):
        oscillation_summary(flat_histogram(max_tau=8 * US), SCHED)


def test_pulsed_default_run(default_run, default_config):
    h = g2_tau(default_run.clicks, default_run.clicks)
    summ = oscillation_summary(h, default_config.schedule)
    assert summ.fraction_minima_below_1 == 1.0
    assert summ.min_g2.size == 19
    assert abs(summ.period_estimate - default_config.schedule.period) <= h.bin_width
    assert summ.g2_at_zero > 1
    # peaks at multiples of the period sit above 1
    assert np.all(summ.peak_g2 > 1)


def test_continuous_run_never_below_one(default_config):
    cfg = default_config.matched_continuous()
    c = simulate(cfg).clicks
    h = g2_tau(c, c)
    assert np.all(h.g2 >= 1 - 3 * h.stderr)
    summ = oscillation_summary(h, default_config.schedule)
    assert summ.fraction_minima_below_1 == 0.0
