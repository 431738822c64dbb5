"""Shared domain types: integer-nanosecond times, the pump schedule and click streams.

All times are ``int`` / ``np.int64`` nanoseconds counted from the start of the
record. Nothing in the package converts time to floating point except for
reporting.
"""
from __future__ import annotations

import os
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

NS = 1
US = 1_000
MS = 1_000_000
S = 1_000_000_000

MAGIC = b"PCS1"
_HEADER = struct.Struct("<4sQQ")


class StreamFormatError(ValueError):
    """A click-stream file could not be parsed."""


@dataclass(frozen=True)
class PumpSchedule:
    """Periodic pump: bright for ``bright_duration`` at the start of every ``period``."""

    period: int = 5 * US
    bright_duration: int = 2 * US

    def __post_init__(self):
        if not 0 < self.bright_duration <= self.period:
            raise ValueError(
                f"need 0 < bright_duration <= period, got "
                f"bright_duration={self.bright_duration}, period={self.period}"
            )

    @property
    def bright_fraction(self) -> float:
        return self.bright_duration / self.period


def interval_index(t, s: PumpSchedule):
    """Pump interval ``k`` containing time ``t`` and whether ``t`` is in its bright span.

    Works element-wise on integer arrays as well as on plain ints.
    """
    k = t // s.period
    return k, (t - k * s.period) < s.bright_duration


def bright_span(k, s: PumpSchedule):
    """Half-open bright span ``[start, end)`` of interval ``k``."""
    start = k * s.period
    return start, start + s.bright_duration


@dataclass(frozen=True)
class ClickStream:
    """Sorted detection timestamps (ns) within ``[0, record_length)``."""

    timestamps: np.ndarray
    record_length: int

    def __post_init__(self):
        ts = np.array(self.timestamps, dtype=np.int64)
        ts.setflags(write=False)
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "record_length", int(self.record_length))
        if ts.ndim != 1:
            raise ValueError("timestamps must be one-dimensional")
        if self.record_length < 0:
            raise ValueError("record_length must be non-negative")
        if ts.size:
            if np.any(np.diff(ts) < 0):
                raise ValueError("timestamps must be nondecreasing")
            if ts[0] < 0 or ts[-1] >= self.record_length:
                raise ValueError("timestamps must lie in [0, record_length)")

    def __len__(self):
        return self.timestamps.size

    @classmethod
    def empty(cls, record_length: int) -> ClickStream:
        return cls(np.empty(0, dtype=np.int64), record_length)

    def merge(self, other: ClickStream) -> ClickStream:
        if other.record_length != self.record_length:
            raise ValueError("cannot merge streams with different record lengths")
        ts = np.concatenate([self.timestamps, other.timestamps])
        return ClickStream(np.sort(ts, kind="stable"), self.record_length)

    def rate(self) -> float:
        """Mean click rate in counts per second."""
        return len(self) / (self.record_length / S) if self.record_length else 0.0


@dataclass(frozen=True)
class TransitEvent:
    arrival: int
    departure: int

    def __post_init__(self):
        if not self.arrival < self.departure:
            raise ValueError("transit needs arrival < departure")

    @property
    def duration(self) -> int:
        return self.departure - self.arrival


@dataclass(frozen=True)
class Transits:
    """Columnar collection of transits, sorted by arrival."""

    arrival: np.ndarray = field(default_factory=lambda: np.empty(0, np.int64))
    departure: np.ndarray = field(default_factory=lambda: np.empty(0, np.int64))

    def __len__(self):
        return self.arrival.size

    def __iter__(self):
        for a, d in zip(self.arrival.tolist(), self.departure.tolist()):
            yield TransitEvent(a, d)

    def __getitem__(self, i) -> TransitEvent:
        return TransitEvent(int(self.arrival[i]), int(self.departure[i]))

    @classmethod
    def from_events(cls, events) -> Transits:
        events = list(events)
        return cls(
            np.array([e.arrival for e in events], dtype=np.int64),
            np.array([e.departure for e in events], dtype=np.int64),
        )


# --- file formats -----------------------------------------------------------

def atomic_write(path, data: bytes | str):
    """Write to a temp file in the target directory and rename on success."""
    path = Path(path)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, mode) as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def encode_binary(stream: ClickStream) -> bytes:
    ts = stream.timestamps.astype("<u8")
    return _HEADER.pack(MAGIC, stream.record_length, ts.size) + ts.tobytes()


def decode_binary(raw: bytes) -> ClickStream:
    if len(raw) < _HEADER.size:
        raise StreamFormatError(f"truncated header at byte {len(raw)}")
    magic, record_length, count = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise StreamFormatError(f"bad magic {magic!r} at byte 0")
    need = _HEADER.size + 8 * count
    if len(raw) != need:
        raise StreamFormatError(
            f"expected {need} bytes for {count} timestamps, found {len(raw)}"
        )
    ts = np.frombuffer(raw, dtype="<u8", offset=_HEADER.size).astype(np.int64)
    try:
        return ClickStream(ts, record_length)
    except ValueError as e:
        raise StreamFormatError(str(e)) from None


def encode_text(stream: ClickStream) -> str:
    lines = [f"# record_length_ns={stream.record_length}"]
    lines.extend(map(str, stream.timestamps.tolist()))
    return "\n".join(lines) + "\n"


def decode_text(text: str) -> ClickStream:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("# record_length_ns="):
        raise StreamFormatError("line 1: expected '# record_length_ns=<n>'")
    try:
        record_length = int(lines[0].split("=", 1)[1])
    except ValueError:
        raise StreamFormatError("line 1: record length is not an integer") from None
    ts = []
    for lineno, line in enumerate(lines[1:], start=2):
        line = line.strip()
        if not line:
            continue
        try:
            ts.append(int(line))
        except ValueError:
            raise StreamFormatError(f"line {lineno}: not an integer: {line!r}") from None
    try:
        return ClickStream(np.array(ts, dtype=np.int64), record_length)
    except ValueError as e:
        raise StreamFormatError(str(e)) from None


def write_stream(stream: ClickStream, path):
    """Write binary unless the path ends in ``.txt``."""
    path = Path(path)
    if path.suffix == ".txt":
        atomic_write(path, encode_text(stream))
    else:
        atomic_write(path, encode_binary(stream))


def read_stream(path) -> ClickStream:
    """Read either format; the binary magic decides."""
    raw = Path(path).read_bytes()
    if raw[:4] == MAGIC:
        return decode_binary(raw)
    try:
        text = raw.decode("ascii")
    except UnicodeDecodeError as e:
        raise StreamFormatError(f"byte {e.start}: neither PCS1 binary nor text") from None
    return decode_text(text)
