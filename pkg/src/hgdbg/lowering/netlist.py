"""Flat SSA-form netlist: what the simulators execute.

Net names are hierarchical (`<instance path>.<flat leaf>`); each net has at
most one driver expression (SSA) and the driver graph is acyclic. A net's
value is its driver's value truncated to the net width. Register state nets
have no driver: their value advances only when the simulator commits the
associated next-value net at a clock edge.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .. import expr
from ..frontend.ast import SourceLoc


class LoweringError(Exception):
    pass


@dataclass
class Net:
    name: str  # hierarchical
    width: int
    driver: Optional[expr.ExprAst]  # None for top inputs and register state
    kind: str  # "input" | "output" | "wire" | "reg"
    instance: str

    @property
    def leaf(self) -> str:
        return self.name.rsplit(".", 1)[1]


@dataclass
class Register:
    name: str  # state net name
    width: int
    clock: str  # net name
    next_net: str
    reset: Optional[int]
    instance: str


@dataclass
class Netlist:
    top: str  # root instance path (= top module name)
    source_file: str
    nets: dict[str, Net] = field(default_factory=dict)
    registers: dict[str, Register] = field(default_factory=dict)
    instances: list[tuple[str, str]] = field(default_factory=list)  # (path, module name)
    clocks: list[str] = field(default_factory=list)

    def add(self, net: Net) -> Net:
        if net.name in self.nets:
            raise LoweringError(f"net {net.name!r} driven twice (SSA violation)")
        self.nets[net.name] = net
        return net

    @property
    def inputs(self) -> list[Net]:
        return [n for n in self.nets.values() if n.kind == "input"]

    @property
    def outputs(self) -> list[Net]:
        return [n for n in self.nets.values() if n.kind == "output"]

    def reads_of(self, net: Net) -> set[str]:
        if net.driver is None:
            return set()
        return expr.identifiers(net.driver)

    def check_acyclic(self):
        """Driver graph over nets must be a DAG (register state breaks loops)."""
        state: dict[str, int] = {}

        def visit(name: str, chain: list[str]):
            if state.get(name) == 2:
                return
            if state.get(name) == 1:
                cycle = " -> ".join(chain[chain.index(name):] + [name])
                raise LoweringError(f"combinational cycle: {cycle}")
            state[name] = 1
            chain.append(name)
            net = self.nets.get(name)
            if net is not None:
                for dep in sorted(self.reads_of(net)):
                    visit(dep, chain)
            chain.pop()
            state[name] = 2

        for name in self.nets:
            visit(name, [])

    def topo_order(self) -> list[str]:
        """Net names in dependency order (drivers before readers)."""
        order: list[str] = []
        state: dict[str, int] = {}

        def visit(name: str):
            if state.get(name):
                return
            state[name] = 1
            net = self.nets.get(name)
            if net is not None:
                for dep in sorted(self.reads_of(net)):
                    visit(dep)
            order.append(name)
            state[name] = 2

        for name in self.nets:
            visit(name)
        return [n for n in order if n in self.nets]


@dataclass
class Annotation:
    """Debug info for one statement occurrence (statement x unrolled copy)."""

    instance: str
    loc: SourceLoc
    ordinal: int
    enable: expr.ExprAst  # over hierarchical net names
    mapping: list[tuple[str, str]]  # (source name, net name); pre-statement SSA versions
    target_net: str = ""  # SSA net this occurrence defines; its removal kills the annotation

    @property
    def source_key(self) -> tuple[str, int, int, int]:
        return (self.loc.file, self.loc.line, self.loc.col, self.ordinal)


@dataclass
class AnnotationSet:
    annotations: list[Annotation] = field(default_factory=list)
    # instance path -> ordered (source name, net name) for ports/registers/locals
    instance_signals: dict[str, list[tuple[str, str]]] = field(default_factory=dict)
    dropped: int = 0  # annotations discarded because optimization removed their nets
