"""Interactive cycle simulator over flat netlists.

Timing model: one clock period is 10 ticks, rising edge at phase 0. At the
edge timestamp t = 10k the simulator has applied cycle k's inputs and
settled all combinational nets against pre-commit register state; that is
the state edge callbacks (and the VCD at that timestamp) observe. Registers
commit after the callbacks return; their new values (and the falling clock)
are recorded at t = 10k + 5, so a replay query at-or-before the next edge
sees exactly what the live simulator saw.
"""

from __future__ import annotations

from typing import IO, Optional, Union

from .. import expr
from ..expr import Value
from ..lowering.netlist import Netlist
from .base import (
    Capabilities,
    CapabilityError,
    HierarchyNode,
    SimBackend,
    SimError,
    UnknownSignalError,
)
from .vcd import VcdWriter

TICKS_PER_CYCLE = 10
FALL_PHASE = 5


class CycleSim(SimBackend):
    capabilities = Capabilities(can_set_value=True, can_set_time=False)

    def __init__(self, netlist: Netlist, stimulus: Optional[list[dict[str, int]]] = None):
        self.netlist = netlist
        self.stimulus = list(stimulus or [])
        self._order = [
            name for name in netlist.topo_order()
            if netlist.nets[name].driver is not None
        ]
        # Ordered for deterministic settle/dump order; VCD bytes must be stable.
        self._clocks = sorted(netlist.clocks)
        self._clock_set = set(netlist.clocks)
        self._inputs: dict[str, Value] = {}
        for net in netlist.inputs:
            if net.name not in self._clock_set:
                self._inputs[net.name] = Value(net.width, 0)
        self._state: dict[str, Value] = {}
        for reg in netlist.registers.values():
            self._state[reg.name] = Value(reg.width, reg.reset or 0)
        self._values: dict[str, Value] = {}
        self._callbacks: dict[int, object] = {}
        self._next_handle = 0
        self._time = 0
        self._cycle = 0
        self._dirty = True
        self._writer: Optional[VcdWriter] = None
        self._writer_file: Optional[IO[str]] = None
        self._dumped: dict[str, Value] = {}
        self._closed = False

    # --- evaluation ---

    def _lookup(self, name: str) -> Value:
        return self._values[name]

    def _settle(self):
        values = self._values
        values.clear()
        for name, v in self._inputs.items():
            values[name] = v
        for name in self._clocks:
            values[name] = Value(1, 1)  # observed high at the edge
        for name, v in self._state.items():
            values[name] = v
        nets = self.netlist.nets
        for name in self._order:
            net = nets[name]
            v = expr.eval_expr(net.driver, self._lookup)
            if v.width != net.width:
                bits = v.bits & ((1 << net.width) - 1)
                v = Value(net.width, bits if v.known else 0, v.known)
            values[name] = v
        self._dirty = False

    def _settle_if_dirty(self):
        if self._dirty:
            self._settle()

    # --- SimBackend primitives ---

    def get_value(self, name: str) -> Value:
        self._settle_if_dirty()
        try:
            return self._values[name]
        except KeyError:
            raise UnknownSignalError(f"unknown signal {name!r}") from None

    def get_hierarchy(self) -> HierarchyNode:
        nodes: dict[str, HierarchyNode] = {}
        root: Optional[HierarchyNode] = None
        for path, _module in self.netlist.instances:
            node = HierarchyNode(path.rsplit(".", 1)[-1])
            nodes[path] = node
            if "." in path:
                nodes[path.rsplit(".", 1)[0]].children.append(node)
            else:
                root = node
        for net in self.netlist.nets.values():
            nodes[net.instance].signals.append((net.leaf, net.width))
        assert root is not None
        return root

    def get_clocks(self) -> list[str]:
        return list(self.netlist.clocks)

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
        return self._time

    def set_time(self, time: int):
        raise CapabilityError("cycle simulation cannot set time")

    def set_value(self, name: str, value: Value):
        net = self.netlist.nets.get(name)
        if net is None:
            raise UnknownSignalError(f"unknown signal {name!r}")
        if value.known and value.bits >= (1 << net.width):
            raise SimError(f"value {value.bits} does not fit {name!r} ({net.width} bits)")
        if name in self._inputs:
            self._inputs[name] = Value(net.width, value.bits, value.known)
        elif name in self._state:
            self._state[name] = Value(net.width, value.bits, value.known)
        else:
            raise SimError(f"cannot drive derived net {name!r}; only inputs and registers")
        self._dirty = True

    # --- VCD recording ---

    def dump_vcd(self, destination: Union[str, IO[str]]):
        """Record every net change each cycle; finalize with close()."""
        if isinstance(destination, str):
            self._writer_file = open(destination, "w", encoding="utf-8")
            f = self._writer_file
        else:
            f = destination
        self._writer = VcdWriter(f)
        widths = {name: net.width for name, net in self.netlist.nets.items()}
        self._writer.write_header(self.get_hierarchy(), widths)
        self._dumped = {}

    def _dump_changes(self, time: int, names):
        writer = self._writer
        if writer is None:
            return
        for name in names:
            v = self._values[name]
            if self._dumped.get(name) != v:
                writer.change(time, name, v)
                self._dumped[name] = v

    # --- execution ---

    def step_cycle(self, inputs: dict[str, int]):
        """One full cycle: apply inputs, settle, fire edge callbacks, commit."""
        for name, raw in inputs.items():
            full = name if "." in name else f"{self.netlist.top}.{name}"
            if full in self._clock_set:
                raise SimError(f"cannot drive clock {full!r} from stimulus")
            if full not in self._inputs:
                raise UnknownSignalError(f"unknown input {full!r}")
            net = self.netlist.nets[full]
            if not 0 <= raw < (1 << net.width):
                raise SimError(f"value {raw} does not fit input {full!r} ({net.width} bits)")
            self._inputs[full] = Value(net.width, raw)
        self._time = self._cycle * TICKS_PER_CYCLE
        self._settle()
        if self._writer is not None:
            self._dump_changes(self._time, self._values.keys())
        for callback in list(self._callbacks.values()):
            callback(self._time)
        self._settle_if_dirty()  # a callback may have forced values
        # Commit: registers latch their next-value nets; visible from phase 5.
        changed = []
        for reg in self.netlist.registers.values():
            new = self._values[reg.next_net]
            if new != self._state[reg.name]:
                self._state[reg.name] = Value(reg.width, new.bits, new.known)
                changed.append(reg.name)
        if self._writer is not None:
            fall = self._time + FALL_PHASE
            for clock in self._clocks:
                self._writer.change(fall, clock, Value(1, 0))
                self._dumped[clock] = Value(1, 0)
            for name in changed:
                self._writer.change(fall, name, self._state[name])
                self._dumped[name] = self._state[name]
        self._dirty = True
        self._cycle += 1

    def run(self):
        for inputs in self.stimulus[self._cycle:]:
            self.step_cycle(inputs)

    def close(self):
        self._closed = True
        self._callbacks.clear()
        if self._writer_file is not None:
            self._writer_file.close()
            self._writer_file = None
        self._writer = None
