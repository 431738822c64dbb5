"""Optical phase jitter from atomic motion along the cavity axis during one pulse."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import US

DEFAULT_WAVELENGTH_NM = 795.0
DEFAULT_VELOCITY_MM_S = 5.0
DEFAULT_PULSE = 2 * US


@dataclass(frozen=True)
class PhaseParams:
    axial_velocity: float = DEFAULT_VELOCITY_MM_S  # mm/s, signed
    pulse_duration: int = DEFAULT_PULSE  # ns
    wavelength: float = DEFAULT_WAVELENGTH_NM  # nm

    def __post_init__(self):
        if not self.wavelength > 0:
            raise ValueError("wavelength must be positive")
        if self.pulse_duration < 0:
            raise ValueError("pulse_duration must be non-negative")

    @property
    def displacement_nm(self) -> float:
        # mm/s * ns = 1e-3 nm
        return abs(self.axial_velocity) * self.pulse_duration * 1e-3


def phase_jitter(p: PhaseParams) -> float:
    """Phase (rad) accumulated by axial displacement over one pulse: 2 pi |v| T / lambda."""
    return 2.0 * np.pi * p.displacement_nm / p.wavelength


@dataclass(frozen=True)
class JitterStats:
    max: float
    mean: float
    counts: np.ndarray
    edges: np.ndarray
    bound: float

    def to_csv(self) -> str:
        lines = ["phase_lo_rad,phase_hi_rad,count"]
        for lo, hi, c in zip(self.edges[:-1].tolist(), self.edges[1:].tolist(),
                             self.counts.tolist()):
            lines.append(f"{lo:.10g},{hi:.10g},{c}")
        return "\n".join(lines) + "\n"


def jitter_distribution(velocity_bound, pulse_duration, wavelength, n_samples, rng,
                        bins: int = 50) -> JitterStats:
    """|phase| for velocities drawn uniformly on ``[-bound, +bound]`` mm/s."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    bound = phase_jitter(PhaseParams(velocity_bound, pulse_duration, wavelength))
    v = rng.uniform(-velocity_bound, velocity_bound, n_samples)
    # same operation order as phase_jitter, so |v| <= bound gives phi <= bound exactly
    phi = 2.0 * np.pi * (np.abs(v) * pulse_duration * 1e-3) / wavelength
    counts, edges = np.histogram(phi, bins=bins, range=(0.0, bound if bound > 0 else 1.0))
    return JitterStats(float(phi.max()), float(phi.mean()), counts, edges, bound)


def as_pi_fraction(phi: float) -> str:
    """``0.0790`` -> ``"pi/39.75"``."""
    if phi == 0:
        return "0"
    return f"pi/{np.pi / phi:.2f}"
