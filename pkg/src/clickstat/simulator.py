"""Monte Carlo click streams for an atom-cavity single-photon source.

Atoms cross the cavity as a homogeneous Poisson process. While inside, an
atom either answers each pump pulse with at most one photon (pulsed mode) or
emits at a ``sin**2``-modulated rate whose phase is set by its own arrival
time (continuous mode). Background clicks and finite detector efficiency
are added on top.

Randomness comes from numpy's PCG64 seeded through ``SeedSequence``; every
stage of :func:`simulate` draws from its own spawned child stream so the
output is a pure function of the config.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import Mode, SimConfig
from .core import MS, S, US, ClickStream, PumpSchedule, TransitEvent, Transits

MIN_TRANSIT = 1 * US


@dataclass(frozen=True)
class SimOutput:
    clicks: ClickStream
    transits: Transits
    emitted_photon_count: int
    background_count: int


def make_rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def _stage_rngs(seed: int, n: int) -> list[np.random.Generator]:
    return [np.random.Generator(np.random.PCG64(ss))
            for ss in np.random.SeedSequence(seed).spawn(n)]


def _truncated_normal(rng, mean, sd, lower, size):
    out = rng.normal(mean, sd, size)
    bad = out < lower
    while bad.any():
        out[bad] = rng.normal(mean, sd, bad.sum())
        bad = out < lower
    return out


def sample_atom_arrivals(flux, record_length, mean_transit, transit_spread, rng) -> Transits:
    """Poisson atom arrivals with truncated-normal transit durations.

    Parameters
    ----------
    flux : float
        Mean arrival rate in atoms per millisecond.
    record_length, mean_transit, transit_spread : int
        Nanoseconds. Durations are drawn from N(mean_transit, transit_spread)
        truncated below at 1 us.
    rng : numpy.random.Generator

    Returns
    -------
    Transits
        Sorted by arrival; departures clipped to ``record_length``.
    """
    if flux < 0 or mean_transit <= 0:
        raise ValueError("need flux >= 0 and mean_transit > 0")
    n = rng.poisson(flux * record_length / MS) if flux > 0 else 0
    arrival = np.sort(rng.integers(0, record_length, n)) if n else np.empty(0, np.int64)
    duration = _truncated_normal(rng, mean_transit, transit_spread, MIN_TRANSIT, n)
    departure = np.minimum(arrival + np.rint(duration).astype(np.int64), record_length)
    return Transits(arrival.astype(np.int64), departure)


def _pulsed_emissions(arrival, departure, s: PumpSchedule, p_emit, rng):
    if arrival.size == 0 or p_emit == 0:
        return np.empty(0, np.int64)
    k_first = arrival // s.period
    k_last = (departure - 1) // s.period
    n_k = k_last - k_first + 1
    owner = np.repeat(np.arange(arrival.size), n_k)
    k = k_first[owner] + (np.arange(owner.size) - np.repeat(np.cumsum(n_k) - n_k, n_k))
    lo = np.maximum(arrival[owner], k * s.period)
    hi = np.minimum(departure[owner], k * s.period + s.bright_duration)
    overlap = np.maximum(hi - lo, 0)
    u = rng.random(owner.size)
    fire = u * s.bright_duration < p_emit * overlap
    lo, overlap = lo[fire], overlap[fire]
    t = lo + np.floor(rng.random(lo.size) * overlap).astype(np.int64)
    return np.sort(t)


def sample_emissions_pulsed(transit: TransitEvent, s: PumpSchedule, p_emit, rng) -> np.ndarray:
    """Photon times from one atom: at most one per overlapped bright span.

    The chance of a photon in interval k is ``p_emit`` times the fraction of
    the bright span covered by the transit; the photon time is uniform over
    the covered part.
    """
    return _pulsed_emissions(np.array([transit.arrival], np.int64),
                             np.array([transit.departure], np.int64), s, p_emit, rng)


def _continuous_emissions(arrival, departure, rabi_period, peak_rate, rng):
    if arrival.size == 0 or peak_rate == 0:
        return np.empty(0, np.int64)
    dur = departure - arrival
    n = rng.poisson(peak_rate * dur / S)
    owner = np.repeat(np.arange(arrival.size), n)
    offset = np.floor(rng.random(owner.size) * dur[owner]).astype(np.int64)
    keep = rng.random(owner.size) < np.sin(np.pi * offset / rabi_period) ** 2
    return np.sort(arrival[owner][keep] + offset[keep])


def continuous_rate(t, arrival, rabi_period, peak_rate):
    """Emission rate (1/s) of an atom that arrived at ``arrival``."""
    return peak_rate * np.sin(np.pi * (np.asarray(t) - arrival) / rabi_period) ** 2


def sample_emissions_continuous(transit: TransitEvent, rabi_period, peak_rate, rng) -> np.ndarray:
    """Inhomogeneous Poisson emission with rate ``peak_rate * sin^2(pi (t - arrival) / rabi_period)``.

    Sampled by thinning a homogeneous process of rate ``peak_rate``.
    """
    if rabi_period <= 0:
        raise ValueError("rabi_period must be positive")
    return _continuous_emissions(np.array([transit.arrival], np.int64),
                                 np.array([transit.departure], np.int64),
                                 rabi_period, peak_rate, rng)


def add_background(stream: ClickStream, rate, rng) -> ClickStream:
    """Merge a homogeneous Poisson process of ``rate`` counts/s into ``stream``."""
    if rate < 0:
        raise ValueError("rate must be non-negative")
    if rate == 0:
        return stream
    n = rng.poisson(rate * stream.record_length / S)
    bg = np.sort(rng.integers(0, stream.record_length, n)) if n else np.empty(0, np.int64)
    return stream.merge(ClickStream(bg, stream.record_length))


def thin_by_efficiency(stream: ClickStream, eta, rng) -> ClickStream:
    """Keep each click independently with probability ``eta``."""
    if not 0 <= eta <= 1:
        raise ValueError("eta must be in [0, 1]")
    keep = rng.random(len(stream)) < eta
    return ClickStream(stream.timestamps[keep], stream.record_length)


def beamsplit(stream: ClickStream, rng) -> tuple[ClickStream, ClickStream]:
    """Route every click to one of two detectors with probability 1/2 each."""
    to_a = rng.random(len(stream)) < 0.5
    ts = stream.timestamps
    return (ClickStream(ts[to_a], stream.record_length),
            ClickStream(ts[~to_a], stream.record_length))


def simulate(config: SimConfig) -> SimOutput:
    """Run the full source model; deterministic in ``config`` (seed included)."""
    cfg = config.validate()
    r_atoms, r_emit, r_bg, r_eff = _stage_rngs(cfg.rng_seed, 4)
    transits = sample_atom_arrivals(cfg.atom_flux, cfg.record_length,
                                    cfg.mean_transit, cfg.transit_spread, r_atoms)
    if cfg.mode is Mode.PULSED:
        photons = _pulsed_emissions(transits.arrival, transits.departure,
                                    cfg.schedule, cfg.p_emit, r_emit)
    else:
        photons = _continuous_emissions(transits.arrival, transits.departure,
                                        cfg.rabi_period, cfg.peak_rate_continuous, r_emit)
    emitted = ClickStream(photons, cfg.record_length)
    with_bg = add_background(emitted, cfg.background_rate, r_bg)
    clicks = thin_by_efficiency(with_bg, cfg.detector_efficiency, r_eff)
    return SimOutput(clicks, transits, len(emitted), len(with_bg) - len(emitted))
