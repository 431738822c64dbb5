"""Simulation configuration and its flat ``key = value`` file format."""
from __future__ import annotations

import enum
import re
from dataclasses import asdict, dataclass, field, replace

from .core import MS, NS, S, US, PumpSchedule

DEFAULT_SEED = 20020717


class ConfigError(ValueError):
    """Invalid configuration; ``key`` names the offending setting."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


class Mode(enum.Enum):
    PULSED = "pulsed"
    CONTINUOUS = "continuous"


@dataclass(frozen=True)
class SimConfig:
    """All parameters of one simulated run.

    Durations are integer nanoseconds, ``atom_flux`` is atoms per millisecond
    and the two rates are counts per second.
    """

    atom_flux: float = 10.0
    mean_transit: int = 20 * US
    transit_spread: int = 5 * US
    schedule: PumpSchedule = field(default_factory=PumpSchedule)
    p_emit: float = 0.3
    background_rate: float = 5000.0
    detector_efficiency: float = 0.5
    mode: Mode = Mode.PULSED
    rabi_period: int = 5 * US
    peak_rate_continuous: float = 120_000.0
    record_length: int = 60 * S
    rng_seed: int = DEFAULT_SEED

    def validate(self) -> SimConfig:
        for key in ("atom_flux", "background_rate", "peak_rate_continuous"):
            if not getattr(self, key) >= 0:
                raise ConfigError(key, f"must be non-negative, got {getattr(self, key)}")
        for key in ("transit_spread", "record_length", "rabi_period"):
            if getattr(self, key) < 0:
                raise ConfigError(key, f"must be non-negative, got {getattr(self, key)}")
        if self.mean_transit <= 0:
            raise ConfigError("mean_transit", "must be positive")
        for key in ("p_emit", "detector_efficiency"):
            if not 0.0 <= getattr(self, key) <= 1.0:
                raise ConfigError(key, f"must be a probability in [0, 1], got {getattr(self, key)}")
        if self.mode is Mode.CONTINUOUS and self.rabi_period <= 0:
            raise ConfigError("rabi_period", "continuous mode needs rabi_period > 0")
        if not 0 <= self.rng_seed < 2**64:
            raise ConfigError("rng_seed", "must fit in an unsigned 64-bit integer")
        return self

    def matched_continuous(self) -> SimConfig:
        """Continuous-mode twin whose mean emission rate per atom equals this pulsed one.

        A pulsed atom emits ``p_emit`` per period on average, and the mean of
        ``sin**2`` is one half, so the matching peak rate is ``2 * p_emit / period``.
        """
        peak = 2.0 * self.p_emit / (self.schedule.period / S)
        return replace(self, mode=Mode.CONTINUOUS, peak_rate_continuous=peak)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("schedule")
        d["period"] = self.schedule.period
        d["bright_duration"] = self.schedule.bright_duration
        d["mode"] = self.mode.value
        return d


# --- parsing ----------------------------------------------------------------

_DURATION_UNITS = {"ns": NS, "us": US, "µs": US, "μs": US, "ms": MS, "s": S}
_RATE_UNITS = {"/s": 1.0, "hz": 1.0, "khz": 1e3, "mhz": 1e6, "/ms": 1e3, "/us": 1e6}
_NUMBER = r"([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)"

DURATION_KEYS = {
    "mean_transit", "transit_spread", "period", "bright_duration",
    "rabi_period", "record_length",
}
RATE_KEYS = {"background_rate", "peak_rate_continuous"}


def parse_duration(text: str, key: str = "duration") -> int:
    """``"2 us"`` -> 2000. A bare number is taken as nanoseconds."""
    m = re.fullmatch(_NUMBER + r"\s*([a-zµμ]*)", text.strip())
    if not m:
        raise ConfigError(key, f"cannot parse duration {text!r}")
    value, unit = float(m.group(1)), m.group(2) or "ns"
    if unit not in _DURATION_UNITS:
        raise ConfigError(key, f"unknown duration unit {unit!r}")
    ns = value * _DURATION_UNITS[unit]
    if ns != round(ns):
        raise ConfigError(key, f"{text!r} is not a whole number of nanoseconds")
    return int(round(ns))


def parse_rate(text: str, key: str = "rate") -> float:
    """Rate in counts per second; accepts ``/s``, ``/ms``, ``/us``, ``Hz``, ``kHz``, ``MHz``."""
    m = re.fullmatch(_NUMBER + r"\s*(\S*)", text.strip())
    if not m:
        raise ConfigError(key, f"cannot parse rate {text!r}")
    unit = m.group(2).lower() or "/s"
    if unit not in _RATE_UNITS:
        raise ConfigError(key, f"unknown rate unit {m.group(2)!r}")
    return float(m.group(1)) * _RATE_UNITS[unit]


def _parse_flux(text: str) -> float:
    # atoms per ms; other rate units are converted
    t = text.strip()
    m = re.fullmatch(_NUMBER + r"\s*(\S*)", t)
    if m and m.group(2).lower() in ("", "/ms"):
        return float(m.group(1))
    return parse_rate(t, "atom_flux") / 1e3


def _parse_float(text: str, key: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigError(key, f"not a number: {text!r}") from None


def config_from_mapping(values: dict[str, str], base: SimConfig | None = None) -> SimConfig:
    """Build a validated config from raw string values, starting from ``base``."""
    base = base or SimConfig()
    kw = {}
    period = base.schedule.period
    bright = base.schedule.bright_duration
    for key, raw in values.items():
        if key == "period":
            period = parse_duration(raw, key)
        elif key == "bright_duration":
            bright = parse_duration(raw, key)
        elif key in DURATION_KEYS:
            kw[key] = parse_duration(raw, key)
        elif key in RATE_KEYS:
            kw[key] = parse_rate(raw, key)
        elif key == "atom_flux":
            kw[key] = _parse_flux(raw)
        elif key in ("p_emit", "detector_efficiency"):
            kw[key] = _parse_float(raw, key)
        elif key == "mode":
            try:
                kw[key] = Mode(raw.strip().lower())
            except ValueError:
                raise ConfigError(key, f"must be 'pulsed' or 'continuous', got {raw!r}") from None
        elif key == "rng_seed":
            try:
                kw[key] = int(raw, 0)
            except ValueError:
                raise ConfigError(key, f"not an integer: {raw!r}") from None
        else:
            raise ConfigError(key, "unknown configuration key")
    try:
        schedule = PumpSchedule(period, bright)
    except ValueError as e:
        raise ConfigError("bright_duration", str(e)) from None
    return replace(base, schedule=schedule, **kw).validate()


def parse_config(text: str, base: SimConfig | None = None) -> SimConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key] = value
    return config_from_mapping(values, base)


def load_config(path) -> SimConfig:
    with open(path) as f:
        return parse_config(f.read())


def format_config(cfg: SimConfig) -> str:
    """Inverse of :func:`parse_config`; every value written with explicit units."""
    d = cfg.to_dict()
    lines = []
    for key, value in d.items():
        if key in DURATION_KEYS:
            lines.append(f"{key} = {value} ns")
        elif key in RATE_KEYS:
            lines.append(f"{key} = {value!r} /s")
        elif key == "atom_flux":
            lines.append(f"{key} = {value!r} /ms")
        else:
            lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
