from pathlib import Path

import pytest

from clickstat.config import (
    ConfigError,
    Mode,
    SimConfig,
    format_config,
    load_config,
    parse_config,
    parse_duration,
    parse_rate,
)
from clickstat.core import MS, S, US

ROOT = Path(__file__).resolve().parents[1]


@pytest.mark.parametrize("text, ns", [
    ("2 us", 2 * US), ("2us", 2 * US), ("0.5us", 500), ("60 s", 60 * S),
    ("1.5 ms", 1_500_000), ("17", 17), ("17 ns", 17), ("2 µs", 2 * US),
])
def test_parse_duration(text, ns):
    assert parse_duration(text) == ns


@pytest.mark.parametrize("text", ["2 parsecs", "fast", "0.3 ns"])
def test_parse_duration_rejects(text):
    with pytest.raises(ConfigError):
        parse_duration(text)


@pytest.mark.parametrize("text, rate", [
    ("5000", 5000.0), ("5000 /s", 5000.0), ("5 /ms", 5000.0), ("5 kHz", 5000.0), ("1e4 Hz", 1e4),
])
def test_parse_rate(text, rate):
    assert parse_rate(text) == pytest.approx(rate)


def test_shipped_default_config_matches_defaults():
    assert load_config(ROOT / "configs" / "default.conf") == SimConfig()


def test_defaults():
    c = SimConfig()
    assert c.atom_flux == 10.0
    assert c.schedule.period == 5 * US and c.schedule.bright_duration == 2 * US
    assert (c.p_emit, c.background_rate, c.detector_efficiency) == (0.3, 5000.0, 0.5)
    assert (c.mean_transit, c.transit_spread, c.record_length) == (20 * US, 5 * US, 60 * S)


def test_parse_with_comments_and_units():
    c = parse_config("""
        # comment
        atom_flux = 3        # atoms per ms
        record_length = 10 ms
        mode = continuous
        rabi_period = 4 us
    """)
    assert c.atom_flux == 3.0
    assert c.record_length == 10 * MS
    assert c.mode is Mode.CONTINUOUS
    assert c.rabi_period == 4 * US


def test_flux_in_other_units():
    assert parse_config("atom_flux = 10000 /s").atom_flux == pytest.approx(10.0)


@pytest.mark.parametrize("text, key", [
    ("p_emit = 1.5", "p_emit"),
    ("detector_efficiency = -0.1", "detector_efficiency"),
    ("background_rate = -1", "background_rate"),
    ("mean_transit = 0 us", "mean_transit"),
    ("mode = continuous\nrabi_period = 0", "rabi_period"),
    ("bright_duration = 6 us", "bright_duration"),
    ("colour = blue", "colour"),
    ("mode = strobe", "mode"),
    ("p_emit = lots", "p_emit"),
])
def test_invalid_values_name_the_key(text, key):
    with pytest.raises(ConfigError) as e:
        parse_config(text)
    assert e.value.key == key
    assert key in str(e.value)


def test_format_round_trip():
    c = SimConfig(atom_flux=3.5, mode=Mode.CONTINUOUS, rng_seed=99, p_emit=0.25)
    assert parse_config(format_config(c)) == c


def test_matched_continuous_rate():
    c = SimConfig().matched_continuous()
    assert c.mode is Mode.CONTINUOUS
    # 0.3 photons per 5 us period, sin^2 averages to 1/2
    assert c.peak_rate_continuous == pytest.approx(2 * 0.3 / 5e-6)
