"""Static checks and per-module analysis for parsed programs.

Loop bounds are compile-time constants, so the checker can afford an exact
unrolled walk per block: use-before-def, conditional-first-definition, and
array index range checks are all decided precisely rather than
conservatively. Cross-block combinational cycles are found on a per-name
dependency graph so that block-level coarseness cannot reject legal code.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from .ast import (
    Assign,
    BinOp,
    Binding,
    Block,
    CombBlock,
    CondOp,
    For,
    If,
    IndexRef,
    Instance,
    ModuleDef,
    Num,
    Port,
    Ref,
    RegDecl,
    SemanticError,
    SeqBlock,
    SourceLoc,
    SourceProgram,
    SrcExpr,
    Stmt,
    UnaryOp,
)

# Hard cap on statement occurrences produced by unrolling one module.
UNROLL_LIMIT = 200_000

BlockKey = tuple[str, int]  # ("comb"|"seq", index)


@dataclass
class ModuleInfo:
    module: ModuleDef
    ports: dict[str, Port]
    regs: dict[str, RegDecl]
    insts: dict[str, Instance]
    local_widths: dict[str, int] = field(default_factory=dict)
    driver_of: dict[str, tuple] = field(default_factory=dict)
    reg_driver: dict[str, int] = field(default_factory=dict)
    clock_ports: set[str] = field(default_factory=set)
    block_refs: dict[BlockKey, list[str]] = field(default_factory=dict)
    block_writes: dict[BlockKey, set[str]] = field(default_factory=dict)
    comb_summary: dict[str, set[str]] = field(default_factory=dict)

    def width_of(self, name: str) -> int:
        if name in self.ports:
            return self.ports[name].width
        if name in self.regs:
            return self.regs[name].width
        return self.local_widths[name]

    def is_signal(self, name: str) -> bool:
        return name in self.ports or name in self.regs or name in self.local_widths


def loop_var_width(stop: int) -> int:
    return max(1, (max(stop - 1, 0)).bit_length())


def expr_width(expr: SrcExpr, width_of, loop_widths: dict[str, int]) -> int:
    """Result width under the max-of-operands convention."""
    if isinstance(expr, Num):
        return max(1, expr.value.bit_length())
    if isinstance(expr, Ref):
        if expr.name in loop_widths:
            return loop_widths[expr.name]
        return width_of(expr.name)
    if isinstance(expr, IndexRef):
        return width_of(expr.name)
    if isinstance(expr, UnaryOp):
        if expr.op == "!":
            return 1
        return expr_width(expr.operand, width_of, loop_widths)
    if isinstance(expr, BinOp):
        if expr.op in ("==", "!=", "<", "<=", ">", ">=", "&&", "||"):
            return 1
        left = expr_width(expr.left, width_of, loop_widths)
        if expr.op in ("<<", ">>"):
            return left
        return max(left, expr_width(expr.right, width_of, loop_widths))
    if isinstance(expr, CondOp):
        return max(
            expr_width(expr.then, width_of, loop_widths),
            expr_width(expr.other, width_of, loop_widths),
        )
    raise TypeError(f"not an expression: {expr!r}")


def validate(program: SourceProgram) -> dict[str, ModuleInfo]:
    """Check the whole program; returns per-module analysis results."""
    names = [m.name for m in program.modules]
    seen: set[str] = set()
    for m in program.modules:
        if m.name in seen:
            raise SemanticError(f"duplicate module name {m.name!r}", m.loc)
        seen.add(m.name)

    by_name = {m.name: m for m in program.modules}
    for m in program.modules:
        for inst in m.instances:
            if inst.module not in by_name:
                raise SemanticError(f"unknown module {inst.module!r}", inst.loc)

    order = _instantiation_order(program, by_name)
    infos: dict[str, ModuleInfo] = {}
    for name in order:
        infos[name] = _analyze_module(by_name[name], infos)
    return infos


def _instantiation_order(program: SourceProgram, by_name) -> list[str]:
    """Children-first topological order; rejects instantiation cycles."""
    order: list[str] = []
    state: dict[str, int] = {}  # 1 = visiting, 2 = done

    def visit(name: str, loc: Optional[SourceLoc]):
        if state.get(name) == 2:
            return
        if state.get(name) == 1:
            raise SemanticError(f"recursive instantiation of module {name!r}", loc)
        state[name] = 1
        for inst in by_name[name].instances:
            visit(inst.module, inst.loc)
        state[name] = 2
        order.append(name)

    for m in program.modules:
        visit(m.name, m.loc)
    return order


def _analyze_module(mod: ModuleDef, infos: dict[str, ModuleInfo]) -> ModuleInfo:
    info = ModuleInfo(mod, {}, {}, {})

    for p in mod.ports:
        if p.name in info.ports:
            raise SemanticError(f"duplicate port name {p.name!r}", p.loc)
        if p.size is not None and p.direction != "in":
            raise SemanticError("array ports are input-only", p.loc)
        info.ports[p.name] = p
    for r in mod.registers:
        if r.name in info.ports or r.name in info.regs:
            raise SemanticError(f"duplicate name {r.name!r}", r.loc)
        info.regs[r.name] = r
    for inst in mod.instances:
        if inst.name in info.ports or inst.name in info.regs or inst.name in info.insts:
            raise SemanticError(f"duplicate name {inst.name!r}", inst.loc)
        info.insts[inst.name] = inst

    _check_clocks(mod, info)
    _collect_drivers(mod, info, infos)
    _infer_local_widths(mod, info, infos)
    _walk_blocks(mod, info, infos)
    _check_cycles_and_summaries(mod, info, infos)
    _check_flat_names(mod, info)
    return info


def flatten_name(name: str) -> str:
    """Source names map to flat net names: dots and array indices become `_`."""
    return name.replace(".", "_").replace("[", "_").rstrip("]")


def _check_flat_names(mod: ModuleDef, info: ModuleInfo):
    """Bundle members and array elements share the flat `_` namespace with
    plain signals; collisions would make RTL names ambiguous."""
    seen: dict[str, str] = {}

    def claim(flat: str, original: str, loc: SourceLoc):
        if flat in seen and seen[flat] != original:
            raise SemanticError(
                f"{original!r} and {seen[flat]!r} collide on flattened RTL name {flat!r}", loc
            )
        seen[flat] = original

    for p in mod.ports:
        if p.size is None:
            claim(flatten_name(p.name), p.name, p.loc)
        else:
            for i in range(p.size):
                claim(f"{flatten_name(p.name)}_{i}", f"{p.name}[{i}]", p.loc)
    for r in mod.registers:
        claim(flatten_name(r.name), r.name, r.loc)
    for name in info.local_widths:
        if "." in name and name not in info.ports:
            raise SemanticError(f"local {name!r} may not contain dots", mod.loc)
        claim(flatten_name(name), name, mod.loc)


def _check_clocks(mod: ModuleDef, info: ModuleInfo):
    def require_clock_port(name: str, loc: SourceLoc):
        port = info.ports.get(name)
        if port is None or port.direction != "in" or port.width != 1 or port.size is not None:
            raise SemanticError(f"clock {name!r} must be a 1-bit input port", loc)
        info.clock_ports.add(name)

    for r in mod.registers:
        require_clock_port(r.clock, r.loc)
    for s in mod.seqs:
        require_clock_port(s.clock, s.loc)


def _collect_drivers(mod: ModuleDef, info: ModuleInfo, infos: dict[str, ModuleInfo]):
    """Assign each local/out-port/register exactly one driver."""

    def claim(name: str, driver: tuple, loc: SourceLoc):
        if name in info.driver_of:
            raise SemanticError(f"{name!r} is driven more than once", loc)
        info.driver_of[name] = driver

    for i, blk in enumerate(mod.combs):
        for stmt in _assignments(blk.body):
            target = stmt.target
            if target in info.regs:
                raise SemanticError(
                    f"register {target!r} may only be assigned in a seq block", stmt.loc
                )
            port = info.ports.get(target)
            if port is not None and port.direction == "in":
                raise SemanticError(f"cannot assign input port {target!r}", stmt.loc)
            if target in info.insts:
                raise SemanticError(f"cannot assign instance {target!r}", stmt.loc)
            existing = info.driver_of.get(target)
            if existing is not None and existing != ("comb", i):
                raise SemanticError(f"{target!r} is driven more than once", stmt.loc)
            info.driver_of[target] = ("comb", i)

    for i, blk in enumerate(mod.seqs):
        for stmt in _assignments(blk.body):
            reg = info.regs.get(stmt.target)
            if reg is None:
                raise SemanticError(
                    f"seq blocks may only assign registers, not {stmt.target!r}", stmt.loc
                )
            if reg.clock != blk.clock:
                raise SemanticError(
                    f"register {stmt.target!r} is clocked by {reg.clock!r}, "
                    f"not by this block's clock {blk.clock!r}",
                    stmt.loc,
                )
            if stmt.target in info.reg_driver and info.reg_driver[stmt.target] != i:
                raise SemanticError(f"register {stmt.target!r} is driven by two seq blocks", stmt.loc)
            info.reg_driver[stmt.target] = i

    for inst in mod.instances:
        child = infos[inst.module]
        bound: set[str] = set()
        for b in inst.bindings:
            port = child.ports.get(b.port)
            if port is None:
                raise SemanticError(f"module {inst.module!r} has no port {b.port!r}", b.loc)
            if b.port in bound:
                raise SemanticError(f"port {b.port!r} bound twice", b.loc)
            bound.add(b.port)
            if port.direction == "in":
                _check_input_binding(mod, info, child, port, b)
            else:
                _check_output_binding(mod, info, inst, child, port, b, claim)
        for p in child.module.in_ports:
            if p.name not in bound:
                raise SemanticError(
                    f"input port {p.name!r} of instance {inst.name!r} is unbound", inst.loc
                )

    for p in mod.out_ports:
        if p.name not in info.driver_of:
            raise SemanticError(f"output port {p.name!r} is never driven", p.loc)


def _check_input_binding(mod, info: ModuleInfo, child: ModuleInfo, port: Port, b: Binding):
    if port.size is not None:
        if not isinstance(b.value, Ref):
            raise SemanticError(f"array port {b.port!r} must be bound to an array port name", b.loc)
        src = info.ports.get(b.value.name)
        if src is None or src.size is None or src.direction != "in":
            raise SemanticError(
                f"array port {b.port!r} must be bound to an input array port", b.loc
            )
        if (src.width, src.size) != (port.width, port.size):
            raise SemanticError(
                f"array binding shape mismatch for {b.port!r}: "
                f"{src.width}x{src.size} vs {port.width}x{port.size}",
                b.loc,
            )
        return
    if b.port in child.clock_ports:
        if not isinstance(b.value, Ref):
            raise SemanticError(f"clock port {b.port!r} must be bound to a clock input", b.loc)
        src = info.ports.get(b.value.name)
        if src is None or src.direction != "in" or src.width != 1 or src.size is not None:
            raise SemanticError(f"clock port {b.port!r} must be bound to a 1-bit input", b.loc)
        info.clock_ports.add(src.name)
        return
    # Plain scalar input: any expression over parent signals; names checked
    # in the block walk below (bindings walk like top-level assignments).


def _check_output_binding(mod, info: ModuleInfo, inst: Instance, child: ModuleInfo,
                          port: Port, b: Binding, claim):
    if not isinstance(b.value, Ref):
        raise SemanticError(f"output port {b.port!r} must be bound to a plain name", b.loc)
    target = b.value.name
    if target in info.regs or target in info.insts:
        raise SemanticError(f"output binding target {target!r} must be a wire", b.loc)
    tport = info.ports.get(target)
    if tport is not None:
        if tport.direction == "in":
            raise SemanticError(f"cannot drive input port {target!r} from an instance", b.loc)
        if tport.width != port.width:
            raise SemanticError(
                f"width mismatch binding {b.port!r} ({port.width}) to {target!r} ({tport.width})",
                b.loc,
            )
    claim(target, ("bind", inst.name, b.port), b.loc)


def _assignments(body: list[Stmt]):
    for stmt in body:
        if isinstance(stmt, Assign):
            yield stmt
        elif isinstance(stmt, If):
            yield from _assignments(stmt.then)
            yield from _assignments(stmt.orelse)
        elif isinstance(stmt, (For, Block)):
            yield from _assignments(stmt.body)


def _infer_local_widths(mod: ModuleDef, info: ModuleInfo, infos: dict[str, ModuleInfo]):
    """Fixpoint width inference for implicitly declared combinational locals."""
    locals_: dict[str, int] = {}
    for name, driver in info.driver_of.items():
        if name in info.ports:
            continue
        if driver[0] == "bind":
            child = infos[info.insts[driver[1]].module]
            locals_[name] = child.ports[driver[2]].width
        else:
            locals_[name] = 1

    def width_of(name: str) -> int:
        if name in info.ports:
            return info.ports[name].width
        if name in info.regs:
            return info.regs[name].width
        return locals_.get(name, 1)

    changed = True
    while changed:
        changed = False
        for i, blk in enumerate(mod.combs):
            for stmt, loop_widths in _assignments_with_loops(blk.body):
                target = stmt.target
                if target in info.ports or target not in locals_:
                    continue
                if info.driver_of.get(target) != ("comb", i):
                    continue
                w = expr_width(stmt.value, width_of, loop_widths)
                if w > locals_[target]:
                    locals_[target] = w
                    changed = True
    info.local_widths = locals_


def _assignments_with_loops(body: list[Stmt], loops: Optional[dict[str, int]] = None):
    loops = loops or {}
    for stmt in body:
        if isinstance(stmt, Assign):
            yield stmt, dict(loops)
        elif isinstance(stmt, If):
            yield from _assignments_with_loops(stmt.then, loops)
            yield from _assignments_with_loops(stmt.orelse, loops)
        elif isinstance(stmt, For):
            inner = dict(loops)
            inner[stmt.var] = loop_var_width(stmt.stop)
            yield from _assignments_with_loops(stmt.body, inner)
        elif isinstance(stmt, Block):
            yield from _assignments_with_loops(stmt.body, loops)


class _BlockWalker:
    """Exact unrolled walk of one block: use-before-def, index ranges,
    name resolution, and referenced-name collection."""

    def __init__(self, mod: ModuleDef, info: ModuleInfo, key: BlockKey):
        self.mod = mod
        self.info = info
        self.key = key
        self.block_driven = {
            name for name, drv in info.driver_of.items() if drv == key
        }
        self.defined: set[str] = set()
        self.loops: dict[str, int] = {}
        self.refs: list[str] = []
        self.writes: set[str] = set()
        self.budget = UNROLL_LIMIT

    def note_ref(self, name: str):
        if name not in self.refs:
            self.refs.append(name)

    def check_expr(self, expr: SrcExpr):
        if isinstance(expr, Num):
            return
        if isinstance(expr, Ref):
            name = expr.name
            if name in self.loops:
                return
            if not self.info.is_signal(name):
                raise SemanticError(f"unknown name {name!r}", expr.loc)
            port = self.info.ports.get(name)
            if port is not None and port.size is not None:
                raise SemanticError(f"array {name!r} must be indexed", expr.loc)
            if name in self.block_driven and name not in self.defined:
                raise SemanticError(
                    f"{name!r} is read before its first definition in this block", expr.loc
                )
            self.note_ref(name)
            return
        if isinstance(expr, IndexRef):
            port = self.info.ports.get(expr.name)
            if port is None or port.size is None:
                raise SemanticError(f"{expr.name!r} is not an array port", expr.loc)
            idx = self.const_index(expr.index)
            if not 0 <= idx < port.size:
                raise SemanticError(
                    f"index {idx} out of range for {expr.name!r}[{port.size}]", expr.loc
                )
            self.note_ref(expr.name)
            return
        if isinstance(expr, UnaryOp):
            self.check_expr(expr.operand)
            return
        if isinstance(expr, BinOp):
            if expr.op in ("/", "%"):
                # A variable divisor would make guard evaluation depend on
                # division by zero, which trace replay treats as unknown;
                # requiring a constant keeps simulation and replay aligned.
                if not isinstance(expr.right, Num) or expr.right.value == 0:
                    raise SemanticError(
                        f"divisor of {expr.op!r} must be a nonzero integer constant",
                        expr.loc,
                    )
            self.check_expr(expr.left)
            self.check_expr(expr.right)
            return
        if isinstance(expr, CondOp):
            self.check_expr(expr.cond)
            self.check_expr(expr.then)
            self.check_expr(expr.other)
            return
        raise TypeError(f"not an expression: {expr!r}")

    def const_index(self, expr: SrcExpr) -> int:
        """Indices must fold to constants once loop variables are bound."""
        value = _fold_with_loops(expr, self.loops)
        if value is None:
            raise SemanticError("array index must be a constant or loop variable", expr.loc)
        return value

    def walk(self, body: list[Stmt], conditional: bool):
        for stmt in body:
            self.budget -= 1
            if self.budget < 0:
                raise SemanticError("loop unrolling exceeds the supported size", stmt.loc)
            if isinstance(stmt, Assign):
                self.check_expr(stmt.value)
                target = stmt.target
                if self.key[0] == "seq":
                    self.note_ref(target)
                elif target in self.block_driven:
                    if target not in self.defined:
                        if conditional:
                            raise SemanticError(
                                f"first assignment to {target!r} must be unconditional "
                                "(a conditional first assignment would imply a latch)",
                                stmt.loc,
                            )
                        self.defined.add(target)
                self.writes.add(target)
            elif isinstance(stmt, If):
                self.check_expr(stmt.cond)
                self.walk(stmt.then, True)
                self.walk(stmt.orelse, True)
            elif isinstance(stmt, For):
                if stmt.var in self.loops:
                    raise SemanticError(f"loop variable {stmt.var!r} shadows an enclosing loop", stmt.loc)
                if self.info.is_signal(stmt.var) or stmt.var in self.info.insts:
                    raise SemanticError(
                        f"loop variable {stmt.var!r} collides with a module-level name", stmt.loc
                    )
                for value in range(stmt.start, stmt.stop):
                    self.loops[stmt.var] = value
                    self.walk(stmt.body, conditional)
                del self.loops[stmt.var]
            elif isinstance(stmt, Block):
                self.walk(stmt.body, conditional)


def _fold_with_loops(expr: SrcExpr, loops: dict[str, int]) -> Optional[int]:
    if isinstance(expr, Num):
        return expr.value
    if isinstance(expr, Ref) and expr.name in loops:
        return loops[expr.name]
    if isinstance(expr, BinOp):
        a = _fold_with_loops(expr.left, loops)
        b = _fold_with_loops(expr.right, loops)
        if a is None or b is None:
            return None
        try:
            return {
                "+": lambda: a + b, "-": lambda: a - b, "*": lambda: a * b,
                "/": lambda: a // b, "%": lambda: a % b,
            }.get(expr.op, lambda: None)()
        except ZeroDivisionError:
            return None
    if isinstance(expr, UnaryOp):
        v = _fold_with_loops(expr.operand, loops)
        if v is None:
            return None
        return {"-": -v, "~": ~v, "!": int(not v)}[expr.op]
    return None


def _walk_blocks(mod: ModuleDef, info: ModuleInfo, infos: dict[str, ModuleInfo]):
    for i, blk in enumerate(mod.combs):
        walker = _BlockWalker(mod, info, ("comb", i))
        walker.walk(blk.body, False)
        info.block_refs[("comb", i)] = _ordered_refs(info, walker.refs)
        info.block_writes[("comb", i)] = walker.writes
    for i, blk in enumerate(mod.seqs):
        walker = _BlockWalker(mod, info, ("seq", i))
        walker.walk(blk.body, False)
        info.block_refs[("seq", i)] = _ordered_refs(info, walker.refs)
        info.block_writes[("seq", i)] = walker.writes
    # Input bindings resolve names in the parent scope, like tiny comb blocks.
    for inst in mod.instances:
        child = infos[inst.module]
        for b in inst.bindings:
            port = child.ports[b.port]
            if port.direction == "in" and port.size is None and b.port not in child.clock_ports:
                walker = _BlockWalker(mod, info, ("bindexpr", -1))
                walker.check_expr(b.value)


def _ordered_refs(info: ModuleInfo, refs: list[str]) -> list[str]:
    """Referenced module-level signals: ports in declaration order, then
    registers in declaration order, then block-crossing names as first seen."""
    out = [p.name for p in info.module.ports if p.name in refs]
    out += [r.name for r in info.module.registers if r.name in refs]
    out += [n for n in refs if n not in info.ports and n not in info.regs]
    return out


def _check_cycles_and_summaries(mod: ModuleDef, info: ModuleInfo, infos: dict[str, ModuleInfo]):
    """Per-name combinational dependency graph, including child instances via
    their input->output summaries; rejects cycles, computes this module's
    own summary for use by parents.

    Within a block, dataflow is sequential (SSA), so a name's dependencies
    are the external names its definitions transitively carry, not the other
    block-local names themselves; reassignment chains like `v = w; w = v + 1`
    are legal and must not look like cycles."""
    deps: dict[str, set[str]] = {}

    def add(name: str, reads: set[str]):
        deps.setdefault(name, set()).update(r for r in reads if r != name)

    for i, blk in enumerate(mod.combs):
        written = info.block_writes[("comb", i)]
        # Iterate to a fixpoint: a loop body may read a value carried over
        # from the previous iteration of a block-local variable.
        carried: dict[str, set[str]] = {}
        while True:
            before = {k: set(v) for k, v in carried.items()}
            _external_deps(blk.body, set(), info, written, carried)
            if carried == before:
                break
        for name, ext in carried.items():
            add(name, ext)
    for inst in mod.instances:
        child = infos[inst.module]
        in_exprs: dict[str, set[str]] = {}
        for b in inst.bindings:
            port = child.ports[b.port]
            if port.direction == "in":
                in_exprs[b.port] = _expr_reads(b.value, info)
        for b in inst.bindings:
            port = child.ports[b.port]
            if port.direction == "out" and isinstance(b.value, Ref):
                reads: set[str] = set()
                for in_port in child.comb_summary.get(b.port, set()):
                    reads |= in_exprs.get(in_port, set())
                add(b.value.name, reads)

    # Cycle detection over names.
    state: dict[str, int] = {}

    def visit(name: str, chain: list[str]):
        if state.get(name) == 2:
            return
        if state.get(name) == 1:
            cycle = " -> ".join(chain[chain.index(name):] + [name])
            raise SemanticError(f"combinational cycle: {cycle}", mod.loc)
        state[name] = 1
        chain.append(name)
        for dep in deps.get(name, ()):
            visit(dep, chain)
        chain.pop()
        state[name] = 2

    for name in list(deps):
        visit(name, [])

    # Summary: which input ports each output port depends on, transitively.
    memo: dict[str, set[str]] = {}

    def reach(name: str) -> set[str]:
        if name in memo:
            return memo[name]
        port = info.ports.get(name)
        if port is not None and port.direction == "in":
            memo[name] = {name}
            return memo[name]
        if name in info.regs:
            memo[name] = set()
            return memo[name]
        memo[name] = set()
        acc: set[str] = set()
        for dep in deps.get(name, ()):
            acc |= reach(dep)
        memo[name] = acc
        return acc

    for p in mod.out_ports:
        info.comb_summary[p.name] = reach(p.name)


def _external_deps(body: list[Stmt], guards: set[str], info: ModuleInfo,
                   written: set[str], carried: dict[str, set[str]]):
    """Accumulate, per block-written name, the external names it depends on."""

    def externals(names: set[str]) -> set[str]:
        out: set[str] = set()
        for name in names:
            if name in written:
                out |= carried.get(name, set())
            else:
                out.add(name)
        return out

    for stmt in body:
        if isinstance(stmt, Assign):
            ext = externals(_expr_reads(stmt.value, info)) | guards
            # Conditional assignment muxes with the previous value.
            carried[stmt.target] = carried.get(stmt.target, set()) | ext
        elif isinstance(stmt, If):
            inner = guards | externals(_expr_reads(stmt.cond, info))
            _external_deps(stmt.then, inner, info, written, carried)
            _external_deps(stmt.orelse, inner, info, written, carried)
        elif isinstance(stmt, (For, Block)):
            _external_deps(stmt.body, guards, info, written, carried)


def _expr_reads(expr: SrcExpr, info: ModuleInfo) -> set[str]:
    """Names an expression reads, excluding registers (state, not comb)."""
    out: set[str] = set()
    stack = [expr]
    while stack:
        node = stack.pop()
        if isinstance(node, (Ref, IndexRef)):
            if node.name not in info.regs and info.is_signal(node.name):
                out.add(node.name)
            if isinstance(node, IndexRef):
                stack.append(node.index)
        elif isinstance(node, UnaryOp):
            stack.append(node.operand)
        elif isinstance(node, BinOp):
            stack.extend((node.left, node.right))
        elif isinstance(node, CondOp):
            stack.extend((node.cond, node.then, node.other))
    return out
