"""Read-only trace replay backend over a parsed VCD TraceStore.

Replay can set time (enabling full reverse debugging) but cannot drive
signals. Sequential forward replay maintains an incremental current-value
table (one dict write per change), so per-edge work scales with trace
activity and get_value at a stop is a dict lookup; after a backward
set_time, queries fall back to per-signal binary search until the next
forward run re-synchronizes.
"""

from __future__ import annotations

import bisect
from typing import Optional, Sequence

from ..expr import Value
from .base import (
    Capabilities,
    CapabilityError,
    HierarchyNode,
    SimBackend,
    SimError,
    UnknownSignalError,
)
from .vcd import TraceStore

DEFAULT_CLOCK_LEAVES = ("clk", "clock")


def detect_clocks(trace: TraceStore, patterns: Sequence[str] = DEFAULT_CLOCK_LEAVES) -> list[str]:
    """Signals whose leaf name matches a clock pattern (case-insensitive)."""
    lowered = tuple(p.lower() for p in patterns)
    return [
        name for name in trace.signals
        if name.rsplit(".", 1)[-1].lower() in lowered
    ]


class ReplayBackend(SimBackend):
    capabilities = Capabilities(can_set_value=False, can_set_time=True)

    def __init__(self, trace: TraceStore, clocks: Optional[list[str]] = None,
                 clock_patterns: Sequence[str] = DEFAULT_CLOCK_LEAVES):
        self.trace = trace
        if clocks is not None:
            for name in clocks:
                if name not in trace.signals:
                    raise SimError(f"clock {name!r} not present in trace")
            self._clocks = list(clocks)
        else:
            self._clocks = detect_clocks(trace, clock_patterns)
        self.edge_times = self._find_edges()
        self._stream = trace.stream
        self._stream_times = [t for t, _n, _v in trace.stream]
        self._cursor = -1  # before time zero; run() then includes an edge at 0
        self._pos = 0
        self._synced = True
        self._current: dict[str, Value] = {}
        self._callbacks: dict[int, object] = {}
        self._next_handle = 0
        self._closed = False

    def _find_edges(self) -> list[int]:
        """Timestamps where any clock transitions (0 or unknown) -> 1,
        deduplicated across clocks."""
        edges: set[int] = set()
        for name in self._clocks:
            sig = self.trace.signals[name]
            previous: Optional[Value] = None
            for t, v in zip(sig.changes_t, sig.changes_v):
                rising = v.known and v.bits == 1 and (
                    previous is None or not previous.known or previous.bits == 0
                )
                if rising:
                    edges.add(t)
                previous = v
        return sorted(edges)

    # --- SimBackend primitives ---

    def get_value(self, name: str) -> Value:
        sig = self.trace.signals.get(name)
        if sig is None:
            raise UnknownSignalError(f"unknown signal {name!r}")
        if self._synced:
            v = self._current.get(name)
            return v if v is not None else Value.unknown(sig.width)
        return sig.value_at(self._cursor)

    def get_hierarchy(self) -> HierarchyNode:
        assert self.trace.hierarchy is not None
        return self.trace.hierarchy

    def get_clocks(self) -> list[str]:
        return list(self._clocks)

    def on_clock_edge(self, callback) -> int:
        if self._closed:
            raise SimError("cannot register a callback on a closed handle")
        handle = self._next_handle
        self._next_handle += 1
        self._callbacks[handle] = callback
        return handle

    def remove_callback(self, handle: int):
        self._callbacks.pop(handle, None)

    def get_time(self) -> int:
        return max(self._cursor, 0)

    def set_time(self, time: int):
        if time < 0 or time > self.trace.end_time:
            raise SimError(f"time {time} beyond trace end ({self.trace.end_time})")
        self._cursor = time
        self._synced = False

    def set_value(self, name: str, value: Value):
        raise CapabilityError("trace replay cannot set signal values")

    # --- execution ---

    def _resync(self):
        """Rebuild the incremental cursor after a time jump."""
        t = self._cursor
        self._pos = bisect.bisect_right(self._stream_times, t)
        self._current = {}
        for name, sig in self.trace.signals.items():
            i = bisect.bisect_right(sig.changes_t, t)
            if i:
                self._current[name] = sig.changes_v[i - 1]
        self._synced = True

    def run(self):
        """Fire edge callbacks for every rising edge strictly after the
        current time, advancing the value cursor incrementally."""
        if not self._synced:
            self._resync()
        stream = self._stream
        stream_times = self._stream_times
        current = self._current
        callbacks = self._callbacks
        edge_times = self.edge_times
        n = len(stream)
        i = bisect.bisect_right(edge_times, self._cursor)
        while i < len(edge_times):
            edge = edge_times[i]
            pos = self._pos
            while pos < n and stream_times[pos] <= edge:
                _t, name, value = stream[pos]
                current[name] = value
                pos += 1
            self._pos = pos
            self._cursor = edge
            for callback in list(callbacks.values()):
                callback(edge)
            if self._synced:
                i += 1
            else:
                # A callback jumped in time (reverse debugging or a time
                # jump); resume from the first edge strictly after it.
                self._resync()
                i = bisect.bisect_right(edge_times, self._cursor)

    def close(self):
        self._closed = True
        self._callbacks.clear()
