"""Reference interpreter for mini-HDL programs.

This is the ground truth the debugger is checked against: it executes the
source program directly (no lowering involved) and records, per cycle, the
final register/output values plus an ordered statement-execution log with
pre- and post-statement values of every in-scope variable.

Execution model per cycle: apply the stimulus, settle all combinational
blocks and instance bindings in dependency order, then evaluate sequential
blocks with non-blocking semantics (register reads see pre-edge values) and
commit. A 1-bit input named `rst`, when high, overrides the commit of every
register that declares a reset value. Clocks are implicit: one cycle is one
rising edge of every clock.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .ast import (
    Assign,
    BinOp,
    Block,
    CondOp,
    For,
    If,
    IndexRef,
    ModuleDef,
    Num,
    Ref,
    SourceLoc,
    SourceProgram,
    SrcExpr,
    Stmt,
    UnaryOp,
)
from .validate import ModuleInfo, expr_width, loop_var_width, validate


class InterpError(Exception):
    """Bad stimulus or inconsistent interpreter input."""


ScopeValue = Union[int, list[int]]


@dataclass
class StmtExec:
    """One executed assignment occurrence."""

    instance: str
    loc: SourceLoc
    ordinal: int
    target: str
    pre: dict[str, ScopeValue]
    post: dict[str, ScopeValue]


@dataclass
class CycleRecord:
    finals: dict[str, int]
    log: list[StmtExec] = field(default_factory=list)


@dataclass
class ExecutionTrace:
    cycles: list[CycleRecord]


class _Instance:
    def __init__(self, path: str, mod: ModuleDef, info: ModuleInfo):
        self.path = path
        self.mod = mod
        self.info = info
        self.env: dict[str, ScopeValue] = {}
        for port in mod.ports:
            self.env[port.name] = [0] * port.size if port.size is not None else 0
        for name in info.clock_ports:
            self.env[name] = 1  # value observed at the rising edge
        for reg in mod.registers:
            self.env[reg.name] = reg.reset or 0


def _mask(value: int, width: int) -> int:
    return value & ((1 << width) - 1)


class _Evaluator:
    """Expression evaluation in one instance's environment."""

    def __init__(self, inst: _Instance, loops: dict[str, int]):
        self.inst = inst
        self.loops = loops

    def width_of(self, name: str) -> int:
        if name in self.loops:
            return self._loop_widths[name]
        return self.inst.info.width_of(name)

    def eval(self, expr: SrcExpr) -> int:
        if isinstance(expr, Num):
            return expr.value
        if isinstance(expr, Ref):
            if expr.name in self.loops:
                return self.loops[expr.name]
            return self.inst.env[expr.name]  # type: ignore[return-value]
        if isinstance(expr, IndexRef):
            idx = self.eval(expr.index)
            array = self.inst.env[expr.name]
            return array[idx]  # type: ignore[index]
        if isinstance(expr, UnaryOp):
            v = self.eval(expr.operand)
            w = self._width(expr)
            if expr.op == "~":
                return _mask(~v, w)
            if expr.op == "-":
                return _mask(-v, w)
            return int(v == 0)
        if isinstance(expr, BinOp):
            a = self.eval(expr.left)
            b = self.eval(expr.right)
            op = expr.op
            if op in ("==", "!=", "<", "<=", ">", ">="):
                return int({
                    "==": a == b, "!=": a != b,
                    "<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b,
                }[op])
            if op == "&&":
                return int(bool(a) and bool(b))
            if op == "||":
                return int(bool(a) or bool(b))
            w = self._width(expr)
            if op == "/":
                return _mask(a // b, w) if b else 0
            if op == "%":
                return _mask(a % b, w) if b else 0
            if op == "<<":
                return _mask(a << b, w) if b < w else 0
            if op == ">>":
                return a >> b
            return _mask({
                "+": a + b, "-": a - b, "*": a * b,
                "&": a & b, "|": a | b, "^": a ^ b,
            }[op], w)
        if isinstance(expr, CondOp):
            c = self.eval(expr.cond)
            v = self.eval(expr.then) if c else self.eval(expr.other)
            return _mask(v, self._width(expr))
        raise TypeError(f"not an expression: {expr!r}")

    @property
    def _loop_widths(self) -> dict[str, int]:
        return getattr(self, "_lw", {})

    def set_loop_widths(self, widths: dict[str, int]):
        self._lw = widths

    def _width(self, expr: SrcExpr) -> int:
        return expr_width(expr, self.width_of, self._loop_widths)


class _BlockRunner:
    """Runs one comb or seq block for one cycle, logging executions.

    Untaken conditional branches are walked without executing so that
    ordinal numbering matches the unrolled statement copies exactly.
    """

    def __init__(self, inst: _Instance, key, log: list[StmtExec],
                 pending: Optional[dict[str, int]] = None):
        self.inst = inst
        self.key = key
        self.log = log
        self.pending = pending  # non-None for seq blocks (NBA semantics)
        self.block_driven = {
            name for name, drv in inst.info.driver_of.items() if drv == key
        }
        self.defined: list[str] = []
        self.loops: dict[str, int] = {}
        self.loop_widths: dict[str, int] = {}
        self.ordinals: dict[int, int] = {}
        self.module_scope = [
            n for n in inst.info.block_refs.get(key, []) if n not in self.block_driven
        ]
        self.ev = _Evaluator(inst, self.loops)
        self.ev.set_loop_widths(self.loop_widths)

    def snapshot(self, override: Optional[tuple[str, int]] = None) -> dict[str, ScopeValue]:
        out: dict[str, ScopeValue] = {}
        for name in self.defined:
            out[name] = self.inst.env[name]
        for var, value in self.loops.items():
            out[var] = value
        for name in self.module_scope:
            value = self.inst.env[name]
            out[name] = list(value) if isinstance(value, list) else value
        if override is not None:
            out[override[0]] = override[1]
        return out

    def run(self, body: list[Stmt]):
        self._walk(body, True)

    def _walk(self, body: list[Stmt], executing: bool):
        for stmt in body:
            if isinstance(stmt, Assign):
                ordinal = self.ordinals.get(stmt.sid, 0)
                self.ordinals[stmt.sid] = ordinal + 1
                if executing:
                    self._execute(stmt, ordinal)
            elif isinstance(stmt, If):
                taken = executing and bool(self.ev.eval(stmt.cond))
                self._walk(stmt.then, taken)
                self._walk(stmt.orelse, executing and not taken)
            elif isinstance(stmt, For):
                self.loop_widths[stmt.var] = loop_var_width(stmt.stop)
                for value in range(stmt.start, stmt.stop):
                    self.loops[stmt.var] = value
                    self._walk(stmt.body, executing)
                del self.loops[stmt.var]
                del self.loop_widths[stmt.var]
            elif isinstance(stmt, Block):
                self._walk(stmt.body, executing)

    def _execute(self, stmt: Assign, ordinal: int):
        target = stmt.target
        width = self.inst.info.width_of(target)
        pre = self.snapshot()
        value = _mask(self.ev.eval(stmt.value), width)
        if self.pending is not None:
            self.pending[target] = value
            post = self.snapshot(override=(target, value))
        else:
            self.inst.env[target] = value
            if target in self.block_driven and target not in self.defined:
                self.defined.append(target)
            post = self.snapshot()
        self.log.append(StmtExec(self.inst.path, stmt.loc, ordinal, target, pre, post))


def _build_instances(program: SourceProgram, infos) -> tuple[list[_Instance], list[tuple]]:
    """Instance tree plus dependency-ordered combinational exec units."""
    instances: list[_Instance] = []
    units: list[tuple] = []  # ("comb", inst, i) | ("bind_in", parent, child, b) | ("bind_out", ...)

    def build(path: str, mod_name: str) -> _Instance:
        mod = program.module(mod_name)
        inst = _Instance(path, mod, infos[mod_name])
        instances.append(inst)
        for i in range(len(mod.combs)):
            units.append(("comb", inst, i))
        for decl in mod.instances:
            child = build(f"{path}.{decl.name}", decl.module)
            child_info = infos[decl.module]
            for b in decl.bindings:
                port = child_info.ports[b.port]
                if port.direction == "in":
                    units.append(("bind_in", inst, child, b))
                else:
                    units.append(("bind_out", inst, child, b))
        return inst

    build(program.top, program.top)
    return instances, _topo_units(units, infos)


def _topo_units(units: list[tuple], infos) -> list[tuple]:
    writes: dict[tuple[str, str], int] = {}
    reads: dict[int, list[tuple[str, str]]] = {}
    for idx, unit in enumerate(units):
        kind = unit[0]
        if kind == "comb":
            _, inst, i = unit
            for name in inst.info.block_writes[("comb", i)]:
                writes[(inst.path, name)] = idx
            refs = inst.info.block_refs[("comb", i)]
            reads[idx] = [
                (inst.path, n) for n in refs
                if n not in inst.info.regs and n not in inst.info.clock_ports
            ]
        elif kind == "bind_in":
            _, parent, child, b = unit
            writes[(child.path, b.port)] = idx
            names = _binding_reads(parent, b.value)
            reads[idx] = [(parent.path, n) for n in names]
        else:
            _, parent, child, b = unit
            writes[(parent.path, b.value.name)] = idx
            reads[idx] = [(child.path, b.port)]

    order: list[int] = []
    indeg = [0] * len(units)
    edges: dict[int, list[int]] = {i: [] for i in range(len(units))}
    for idx, keys in reads.items():
        for key in keys:
            src = writes.get(key)
            if src is not None and src != idx:
                edges[src].append(idx)
                indeg[idx] += 1
    queue = [i for i in range(len(units)) if indeg[i] == 0]
    while queue:
        i = queue.pop(0)
        order.append(i)
        for j in edges[i]:
            indeg[j] -= 1
            if indeg[j] == 0:
                queue.append(j)
    if len(order) != len(units):
        raise InterpError("internal: combinational cycle survived validation")
    return [units[i] for i in order]


def _binding_reads(parent: _Instance, expr: SrcExpr) -> set[str]:
    names: set[str] = set()
    stack = [expr]
    while stack:
        node = stack.pop()
        if isinstance(node, (Ref, IndexRef)):
            if node.name not in parent.info.regs and node.name not in parent.info.clock_ports:
                names.add(node.name)
            if isinstance(node, IndexRef):
                stack.append(node.index)
        elif isinstance(node, UnaryOp):
            stack.append(node.operand)
        elif isinstance(node, BinOp):
            stack.extend((node.left, node.right))
        elif isinstance(node, CondOp):
            stack.extend((node.cond, node.then, node.other))
    return names


def _normalize_stimulus(top: ModuleDef, info: ModuleInfo, cycle: dict) -> dict[str, ScopeValue]:
    """Expand `name[idx]` keys, check names and widths."""
    out: dict[str, ScopeValue] = {}
    arrays: dict[str, dict[int, int]] = {}
    for key, value in cycle.items():
        if "[" in key:
            base, rest = key.split("[", 1)
            idx = int(rest.rstrip("]"))
            arrays.setdefault(base, {})[idx] = value
        else:
            out[key] = value
    for base, elems in arrays.items():
        port = info.ports.get(base)
        if port is None or port.size is None:
            raise InterpError(f"unknown input name {base!r}")
        values = list(out.get(base, [0] * port.size))
        for idx, v in elems.items():
            if not 0 <= idx < port.size:
                raise InterpError(f"index {idx} out of range for input {base!r}")
            values[idx] = v
        out[base] = values

    for name, value in out.items():
        port = info.ports.get(name)
        if port is None or port.direction != "in":
            raise InterpError(f"unknown input name {name!r}")
        if name in info.clock_ports:
            raise InterpError(f"cannot drive clock input {name!r} from stimulus")
        if port.size is None:
            if not isinstance(value, int):
                raise InterpError(f"input {name!r} expects a scalar value")
            if not 0 <= value < (1 << port.width):
                raise InterpError(f"width mismatch: {value} does not fit input {name!r} ({port.width} bits)")
        else:
            if not isinstance(value, list) or len(value) != port.size:
                raise InterpError(f"input {name!r} expects {port.size} elements")
            for v in value:
                if not 0 <= v < (1 << port.width):
                    raise InterpError(f"width mismatch: {v} does not fit input {name!r} ({port.width} bits)")
    for port in top.in_ports:
        if port.name not in info.clock_ports and port.name not in out:
            raise InterpError(f"stimulus does not assign input {port.name!r}")
    return out


def interpret(program: SourceProgram, stimulus: list[dict]) -> ExecutionTrace:
    """Run the program over per-cycle input maps. Pure: same inputs, same trace."""
    infos = validate(program)
    instances, units = _build_instances(program, infos)
    top = instances[0]

    cycles: list[CycleRecord] = []
    for cycle_inputs in stimulus:
        log: list[StmtExec] = []
        values = _normalize_stimulus(top.mod, top.info, cycle_inputs)
        for name, value in values.items():
            top.env[name] = list(value) if isinstance(value, list) else value

        for unit in units:
            if unit[0] == "comb":
                _, inst, i = unit
                _BlockRunner(inst, ("comb", i), log).run(inst.mod.combs[i].body)
            elif unit[0] == "bind_in":
                _, parent, child, b = unit
                port = child.info.ports[b.port]
                if port.size is not None:
                    child.env[b.port] = list(parent.env[b.value.name])  # type: ignore[arg-type]
                else:
                    value = _Evaluator(parent, {}).eval(b.value)
                    child.env[b.port] = _mask(value, port.width)
            else:
                _, parent, child, b = unit
                width = parent.info.width_of(b.value.name)
                child_value = child.env[b.port]
                parent.env[b.value.name] = _mask(child_value, width)  # type: ignore[arg-type]

        pendings: list[tuple[_Instance, dict[str, int]]] = []
        for inst in instances:
            pending: dict[str, int] = {}
            for i, blk in enumerate(inst.mod.seqs):
                _BlockRunner(inst, ("seq", i), log, pending).run(blk.body)
            pendings.append((inst, pending))

        finals: dict[str, int] = {}
        for inst, pending in pendings:
            rst_port = inst.info.ports.get("rst")
            in_reset = (
                rst_port is not None
                and rst_port.direction == "in"
                and rst_port.width == 1
                and rst_port.size is None
                and inst.env.get("rst") == 1
            )
            for reg in inst.mod.registers:
                if in_reset and reg.reset is not None:
                    committed = reg.reset
                else:
                    committed = pending.get(reg.name, inst.env[reg.name])
                inst.env[reg.name] = committed
                finals[f"{inst.path}.{reg.name}"] = committed  # type: ignore[assignment]
        for inst in instances:
            for port in inst.mod.out_ports:
                finals[f"{inst.path}.{port.name}"] = inst.env[port.name]  # type: ignore[assignment]
        cycles.append(CycleRecord(finals, log))
    return ExecutionTrace(cycles)
