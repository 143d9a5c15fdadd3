"""Simulation backends behind the unified simulator interface."""

from .base import (
    Capabilities,
    CapabilityError,
    HierarchyNode,
    SimBackend,
    SimError,
    UnknownSignalError,
)
from .cyclesim import TICKS_PER_CYCLE, CycleSim
from .hiermap import HierarchyMap, MappingError, map_hierarchy
from .replay import ReplayBackend, detect_clocks
from .vcd import SignalTrace, TraceStore, VcdError, VcdWriter, parse_vcd

__all__ = [
    "Capabilities", "CapabilityError", "CycleSim", "HierarchyMap",
    "HierarchyNode", "MappingError", "ReplayBackend", "SignalTrace",
    "SimBackend", "SimError", "TICKS_PER_CYCLE", "TraceStore",
    "UnknownSignalError", "VcdError", "VcdWriter", "detect_clocks",
    "map_hierarchy", "parse_vcd",
]
