"""Click-stream simulation and photon-correlation analysis for a pulsed atom-cavity single-photon source."""

__version__ = "0.1.0"

from .config import Mode, SimConfig
from .core import ClickStream, PumpSchedule, TransitEvent, bright_span, interval_index
from .simulator import simulate

__all__ = [
    "ClickStream",
    "Mode",
    "PumpSchedule",
    "SimConfig",
    "TransitEvent",
    "bright_span",
    "interval_index",
    "simulate",
]
