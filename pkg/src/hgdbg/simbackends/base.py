"""Unified simulator interface shared by the cycle simulator and trace replay.

The primitive set is deliberately small: get a signal value, get hierarchy
and clock information, register a callback on clock edges, get/set time, set
a signal value. The last two are capability-gated; a trace replay can move
in time but cannot drive signals, an interactive simulator is the opposite.
Edge callbacks are synchronous: the backend does not advance until the
callback returns, and every value is stable for the duration of the edge.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from ..expr import Value


class SimError(Exception):
    pass


class CapabilityError(SimError):
    """Operation not supported by this backend (set_value on replay, ...)."""


class UnknownSignalError(SimError):
    pass


@dataclass
class Capabilities:
    can_set_value: bool
    can_set_time: bool


@dataclass
class HierarchyNode:
    """One instance scope: signal leaves plus child scopes."""

    name: str
    signals: list[tuple[str, int]] = field(default_factory=list)  # (leaf, width)
    children: list["HierarchyNode"] = field(default_factory=list)

    def child(self, name: str) -> "HierarchyNode | None":
        for c in self.children:
            if c.name == name:
                return c
        return None

    def walk(self, prefix: str = ""):
        """Yield (path, node) pairs, depth first."""
        path = f"{prefix}.{self.name}" if prefix else self.name
        yield path, self
        for c in self.children:
            yield from c.walk(path)


class SimBackend:
    """Interface contract; see CycleSim and ReplayBackend."""

    capabilities: Capabilities

    def get_value(self, name: str) -> Value:
        raise NotImplementedError

    def get_hierarchy(self) -> HierarchyNode:
        raise NotImplementedError

    def get_clocks(self) -> list[str]:
        raise NotImplementedError

    def on_clock_edge(self, callback) -> int:
        raise NotImplementedError

    def remove_callback(self, handle: int):
        raise NotImplementedError

    def get_time(self) -> int:
        raise NotImplementedError

    def set_time(self, time: int):
        raise CapabilityError("this backend cannot set simulation time")

    def set_value(self, name: str, value: Value):
        raise CapabilityError("this backend cannot set signal values")

    def run(self):
        """Advance to the end of the workload, firing edge callbacks."""
        raise NotImplementedError


def hierarchy_paths(root: HierarchyNode) -> dict[str, HierarchyNode]:
    return dict(root.walk())
