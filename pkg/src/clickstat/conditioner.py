"""Conditioned photon statistics g2(dN) of a pulsed source.

Every click inside a bright span is a trigger: it signals that an atom is
probably in the cavity. For each trigger the click count of the following
(neighbouring) bright interval is appended to a chain, and g2(dN) is the
ordinary pulsed correlation along that chain, ``dN`` being the distance
between chain positions::

    g2(0)  = <n (n - 1)> / <n>**2
    g2(dN) = <n_i n_{i+dN}> / <n>**2

Consecutive triggers from one atom put its later pulses next to each other
in the chain, which produces the side peaks at ``dN = +-1``.

For diagnostics each trigger also keeps the full window of counts over
intervals ``k0 - W .. k0 + W`` (trigger included at offset 0); the chain
entry is the ``+1`` column of that window.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ClickStream, PumpSchedule, interval_index

DEFAULT_W = 5
DEFAULT_BOOTSTRAP = 1000
DEFAULT_BLOCK = 64
NEIGHBOR = 1


class DegenerateChain(ValueError):
    """The chain has no photons, so g2(dN) cannot be normalized."""


@dataclass(frozen=True)
class TriggerSet:
    click_time: np.ndarray
    interval_k: np.ndarray

    def __len__(self):
        return self.click_time.size


@dataclass(frozen=True)
class IntervalChain:
    """One window of bright-span counts per trigger, in trigger order.

    ``counts[i, W + o]`` is the number of clicks in the bright span of
    interval ``k0[i] + o``.
    """

    k0: np.ndarray
    W: int
    counts: np.ndarray

    def __len__(self):
        return self.k0.size

    @property
    def offsets(self) -> np.ndarray:
        return np.arange(-self.W, self.W + 1)

    def column(self, offset: int) -> np.ndarray:
        return self.counts[:, self.W + offset]

    @property
    def sequence(self) -> np.ndarray:
        """The chained neighbouring-interval counts that g2(dN) is computed from."""
        return self.column(NEIGHBOR)

    def mean_profile(self) -> np.ndarray:
        """Mean count at each offset ``-W..W`` around the trigger."""
        return self.counts.mean(axis=0) if len(self) else np.zeros(2 * self.W + 1)


@dataclass(frozen=True)
class ConditionedResult:
    delta_n: np.ndarray
    g2: np.ndarray
    stderr: np.ndarray
    pair_count: np.ndarray
    n_segments: int
    mean_count: float

    def at(self, dn: int) -> tuple[float, float]:
        i = int(np.flatnonzero(self.delta_n == dn)[0])
        return float(self.g2[i]), float(self.stderr[i])

    def side_mean(self, lo: int, hi: int) -> float:
        """Mean of g2 over ``lo <= |dN| <= hi``."""
        sel = (np.abs(self.delta_n) >= lo) & (np.abs(self.delta_n) <= hi)
        return float(self.g2[sel].mean())

    def to_csv(self, header: dict | None = None) -> str:
        lines = [f"# {k}={v}" for k, v in (header or {}).items()]
        lines.append("delta_n,g2,stderr,pair_count")
        for dn, g, e, n in zip(self.delta_n.tolist(), self.g2.tolist(),
                               self.stderr.tolist(), self.pair_count.tolist()):
            lines.append(f"{dn},{g:.10g},{e:.10g},{n}")
        return "\n".join(lines) + "\n"


def n_complete_intervals(record_length: int, s: PumpSchedule) -> int:
    """Intervals whose whole bright span lies inside the record."""
    return max(0, (record_length - s.bright_duration) // s.period + 1)


def find_triggers(stream: ClickStream, s: PumpSchedule) -> TriggerSet:
    """All clicks inside bright spans, tagged with their interval index."""
    k, bright = interval_index(stream.timestamps, s)
    return TriggerSet(stream.timestamps[bright], k[bright])


def build_chain(stream: ClickStream, s: PumpSchedule, triggers: TriggerSet,
                W: int = DEFAULT_W) -> IntervalChain:
    """Count clicks in bright spans ``k0 - W .. k0 + W`` around every trigger.

    Windows reaching past either end of the record are dropped. Several
    triggers in one interval each get their own window.
    """
    if W < 1:
        raise ValueError("W must be >= 1")
    n_int = n_complete_intervals(stream.record_length, s)
    k, bright = interval_index(stream.timestamps, s)
    per_interval = np.bincount(k[bright], minlength=n_int)[:n_int]
    k0 = triggers.interval_k
    k0 = k0[(k0 - W >= 0) & (k0 + W < n_int)]
    offsets = np.arange(-W, W + 1)
    counts = per_interval[k0[:, None] + offsets] if k0.size else np.zeros((0, 2 * W + 1), np.int64)
    return IntervalChain(k0.astype(np.int64), W, counts.astype(np.int64))


def _block_stats(seq: np.ndarray, W: int, block: int) -> np.ndarray:
    """Per-block integer sums: entries, sum n, sum n(n-1), then per lag 1..W pair count and sum of products.

    A pair ``(i, i + d)`` belongs to the block of ``i``.
    """
    n = seq.size
    blk = np.arange(n) // block
    nb = int(blk[-1]) + 1
    cols = [np.bincount(blk, minlength=nb),
            np.bincount(blk, weights=seq, minlength=nb),
            np.bincount(blk, weights=seq * (seq - 1), minlength=nb)]
    for d in range(1, W + 1):
        first = blk[: max(n - d, 0)]
        cols.append(np.bincount(first, minlength=nb))
        cols.append(np.bincount(first, weights=seq[:-d] * seq[d:] if n > d else [], minlength=nb))
    return np.rint(np.stack(cols, axis=1)).astype(np.int64)


def _g2_from_sums(sums: np.ndarray, W: int) -> np.ndarray:
    """g2 for dN = 0..W from summed statistics (last axis as in :func:`_block_stats`)."""
    sums = np.asarray(sums, dtype=float)
    entries, total, fact = sums[..., 0], sums[..., 1], sums[..., 2]
    mean = total / entries
    out = [fact / entries / mean**2]
    for d in range(1, W + 1):
        pairs, prod = sums[..., 1 + 2 * d], sums[..., 2 + 2 * d]
        with np.errstate(invalid="ignore", divide="ignore"):
            out.append(prod / pairs / mean**2)
    return np.stack(out, axis=-1)


def _mirror(values_0_to_W: np.ndarray) -> np.ndarray:
    return np.concatenate([values_0_to_W[..., :0:-1], values_0_to_W], axis=-1)


def g2_dN(chain: IntervalChain, n_boot: int = DEFAULT_BOOTSTRAP, seed: int = 0,
          block: int = DEFAULT_BLOCK) -> ConditionedResult:
    """Conditioned correlation along the chain of neighbouring-interval counts.

    Parameters
    ----------
    chain : IntervalChain
    n_boot : int
        Bootstrap replicates for the errors; 0 skips them (stderr is NaN).
    seed : int
        Seed of the bootstrap generator.
    block : int
        Chain entries per bootstrap block. Blocks are resampled with
        replacement, which keeps short-range correlation inside a block.

    Returns
    -------
    ConditionedResult
        ``delta_n`` runs over ``-W..W``.
    """
    seq = chain.sequence
    W = chain.W
    if seq.size == 0 or seq.sum() == 0:
        raise DegenerateChain("no photons in the chained intervals")
    stats = _block_stats(seq, W, block)
    total = stats.sum(axis=0)
    g_half = _g2_from_sums(total, W)
    err_half = np.full(W + 1, np.nan)
    if n_boot > 0:
        rng = np.random.Generator(np.random.PCG64(seed))
        nb = stats.shape[0]
        reps = np.empty((n_boot, W + 1))
        st = stats.astype(float)
        for r in range(n_boot):
            w = np.bincount(rng.integers(0, nb, nb), minlength=nb)
            reps[r] = _g2_from_sums(w @ st, W)
        err_half = np.nanstd(reps, axis=0)
    pairs_half = np.concatenate([[total[0]], total[3::2]])
    return ConditionedResult(
        delta_n=np.arange(-W, W + 1),
        g2=_mirror(g_half),
        stderr=_mirror(err_half),
        pair_count=_mirror(pairs_half),
        n_segments=len(chain),
        mean_count=float(total[1] / total[0]),
    )


def conditioned_g2(stream: ClickStream, s: PumpSchedule, W: int = DEFAULT_W,
                   n_boot: int = DEFAULT_BOOTSTRAP, seed: int = 0):
    """find_triggers -> build_chain -> g2_dN in one call; returns ``(result, triggers, chain)``."""
    triggers = find_triggers(stream, s)
    chain = build_chain(stream, s, triggers, W)
    return g2_dN(chain, n_boot=n_boot, seed=seed), triggers, chain


def g2_dN_bruteforce(stream: ClickStream, s: PumpSchedule, W: int = DEFAULT_W) -> ConditionedResult:
    """Exhaustive-scan reference for the conditioned pipeline (no bootstrap).

    Every neighbouring-interval count is a full scan of the stream and every
    moment is an explicit integer sum over the chain.
    """
    if W < 1:
        raise ValueError("W must be >= 1")
    arr = stream.timestamps
    P, B = s.period, s.bright_duration
    last = (stream.record_length - B) // P  # last interval with a complete bright span
    seq = []
    for t in arr.tolist():
        k = t // P
        if not (k * P <= t < k * P + B):
            continue
        if k - W < 0 or k + W > last:
            continue
        lo = (k + NEIGHBOR) * P
        seq.append(int(np.count_nonzero((arr >= lo) & (arr < lo + B))))
    if not seq or sum(seq) == 0:
        raise DegenerateChain("no photons in the chained intervals")
    n = len(seq)
    total = sum(seq)
    fact = sum(x * (x - 1) for x in seq)
    sums = [n, total, fact]
    pair_counts = [n]
    for d in range(1, W + 1):
        pairs = max(n - d, 0)
        prod = sum(seq[i] * seq[i + d] for i in range(n - d))
        sums += [pairs, prod]
        pair_counts.append(pairs)
    g_half = _g2_from_sums(np.array(sums), W)
    return ConditionedResult(
        delta_n=np.arange(-W, W + 1),
        g2=_mirror(g_half),
        stderr=np.full(2 * W + 1, np.nan),
        pair_count=_mirror(np.array(pair_counts)),
        n_segments=n,
        mean_count=total / n,
    )
