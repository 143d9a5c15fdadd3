"""Lowering from source programs to flat SSA netlists.

Fixed-length loops are fully unrolled and conditionals are flattened into
mux form: an assignment to `v` under guards c1..ck becomes a new SSA net

    v__k = select(c1 && ... && ck, rhs, v__{k-1})

so every net is unconditionally driven; whether the source statement
"executed" lives entirely in the annotation's enable condition (the
AND-reduction of the active guard stack). Alongside the netlist, the pass
records one annotation per statement occurrence: source location, unroll
ordinal, enable condition, and the pre-statement mapping from source
variables to SSA nets.

Registers are not SSA-renamed: sequential assignments build a next-value
chain read at commit time, and in-scope mappings for registers always point
at the state net (pre-edge value).
"""

from __future__ import annotations

from typing import Optional

from .. import expr
from ..frontend.ast import (
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
    SourceProgram,
    SrcExpr,
    Stmt,
    UnaryOp,
)
from ..frontend.validate import (
    UNROLL_LIMIT,
    ModuleInfo,
    flatten_name,
    loop_var_width,
    validate,
)
from .netlist import Annotation, AnnotationSet, LoweringError, Net, Netlist, Register


def _and_reduce(conds: list[expr.ExprAst]) -> expr.ExprAst:
    if not conds:
        return expr.TRUE
    acc = conds[0]
    for c in conds[1:]:
        acc = expr.Binary("&&", acc, c)
    return acc


class _InstanceLowerer:
    def __init__(self, program: SourceProgram, infos: dict[str, ModuleInfo],
                 netlist: Netlist, annset: AnnotationSet,
                 path: str, mod: ModuleDef, bindings: dict[str, expr.ExprAst]):
        self.program = program
        self.infos = infos
        self.netlist = netlist
        self.annset = annset
        self.path = path
        self.mod = mod
        self.info = infos[mod.name]
        self.bindings = bindings  # in-port name -> driver expr (parent side)
        self.is_top = path == program.top
        self.versions: dict[str, str] = {}  # source var -> current SSA net
        self.defcount: dict[str, int] = {}
        self.block_defined: list[str] = []
        self.block_key: Optional[tuple] = None
        self.loops: dict[str, tuple[int, int, str]] = {}  # var -> (value, width, const net)
        self.ordinals: dict[int, int] = {}
        self.pending: dict[str, str] = {}  # register -> latest next-chain net
        self.budget = UNROLL_LIMIT
        self.bind_out_targets: list[str] = []

    def net_name(self, leaf: str) -> str:
        return f"{self.path}.{leaf}"

    def elem_net(self, base: str, idx: int) -> str:
        return self.net_name(f"{flatten_name(base)}_{idx}")

    def signal_net(self, name: str) -> str:
        return self.net_name(flatten_name(name))

    # --- structure ---

    def lower(self):
        self.netlist.instances.append((self.path, self.mod.name))
        for port in self.mod.in_ports:
            kind = "input" if self.is_top else "wire"
            if port.size is None:
                self.netlist.add(Net(self.signal_net(port.name), port.width,
                                     self.bindings.get(port.name), kind, self.path))
            else:
                drivers = self.bindings.get(port.name)
                for i in range(port.size):
                    driver = drivers[i] if drivers is not None else None
                    self.netlist.add(Net(self.elem_net(port.name, i), port.width,
                                         driver, kind, self.path))
        for reg in self.mod.registers:
            self.netlist.add(Net(self.signal_net(reg.name), reg.width, None, "reg", self.path))

        for i, blk in enumerate(self.mod.combs):
            self.block_key = ("comb", i)
            self.block_defined = []
            self.walk(blk.body, [])
            for name in self.block_defined:
                self.commit_net(name)
        for i, blk in enumerate(self.mod.seqs):
            self.block_key = ("seq", i)
            self.block_defined = []
            self.walk(blk.body, [])
        self.emit_register_nexts()
        self.lower_children()
        self.record_instance_signals()

    def commit_net(self, name: str):
        """Final committed net carrying the source-level name."""
        port = self.info.ports.get(name)
        kind = "output" if (port is not None and self.is_top) else "wire"
        self.netlist.add(Net(self.signal_net(name), self.info.width_of(name),
                             expr.Ident(self.versions[name]), kind, self.path))

    def emit_register_nexts(self):
        rst = self.info.ports.get("rst")
        has_reset_input = (
            rst is not None and rst.direction == "in"
            and rst.width == 1 and rst.size is None
        )
        for reg in self.mod.registers:
            base: expr.ExprAst
            if reg.name in self.pending:
                base = expr.Ident(self.pending[reg.name])
            else:
                base = expr.Ident(self.signal_net(reg.name))
            if has_reset_input and reg.reset is not None:
                base = expr.Ternary(expr.Ident(self.signal_net("rst")),
                                    expr.Lit(reg.reset, reg.width), base)
            next_name = self.net_name(f"{flatten_name(reg.name)}__next")
            self.netlist.add(Net(next_name, reg.width, base, "wire", self.path))
            self.netlist.registers[self.signal_net(reg.name)] = Register(
                self.signal_net(reg.name), reg.width,
                self.signal_net(reg.clock), next_name, reg.reset, self.path,
            )

    def lower_children(self):
        for decl in self.mod.instances:
            child_mod = self.program.module(decl.module)
            child_info = self.infos[decl.module]
            child_path = f"{self.path}.{decl.name}"
            in_drivers: dict[str, object] = {}
            out_binds: list[tuple[str, str]] = []  # (child out port, parent target)
            for b in decl.bindings:
                port = child_info.ports[b.port]
                if port.direction == "out":
                    out_binds.append((b.port, b.value.name))  # type: ignore[union-attr]
                elif port.size is not None:
                    src = b.value.name  # type: ignore[union-attr]
                    in_drivers[b.port] = [
                        expr.Ident(self.elem_net(src, i)) for i in range(port.size)
                    ]
                else:
                    in_drivers[b.port] = self.lower_expr(b.value, module_level=True)
            _InstanceLowerer(self.program, self.infos, self.netlist, self.annset,
                             child_path, child_mod, in_drivers).lower()
            for child_port, target in out_binds:
                port = self.info.ports.get(target)
                kind = "output" if (port is not None and self.is_top) else "wire"
                self.netlist.add(Net(self.signal_net(target), self.info.width_of(target),
                                     expr.Ident(f"{child_path}.{flatten_name(child_port)}"),
                                     kind, self.path))
                self.bind_out_targets.append(target)

    def record_instance_signals(self):
        entries: list[tuple[str, str]] = []
        for port in self.mod.ports:
            if port.size is None:
                entries.append((port.name, self.signal_net(port.name)))
            else:
                for i in range(port.size):
                    entries.append((f"{port.name}[{i}]", self.elem_net(port.name, i)))
        for reg in self.mod.registers:
            entries.append((reg.name, self.signal_net(reg.name)))
        for name in self.versions:
            if name not in self.info.ports:
                entries.append((name, self.signal_net(name)))
        for name in self.bind_out_targets:
            if name not in self.info.ports:
                entries.append((name, self.signal_net(name)))
        self.annset.instance_signals[self.path] = entries

    # --- statements ---

    def walk(self, body: list[Stmt], conds: list[expr.ExprAst]):
        for stmt in body:
            self.budget -= 1
            if self.budget < 0:
                raise LoweringError("loop unrolling exceeds the supported size")
            if isinstance(stmt, Assign):
                self.lower_assign(stmt, conds)
            elif isinstance(stmt, If):
                cond = self.lower_expr(stmt.cond)
                self.walk(stmt.then, conds + [cond])
                if stmt.orelse:
                    self.walk(stmt.orelse, conds + [expr.Unary("!", cond)])
            elif isinstance(stmt, For):
                width = loop_var_width(stmt.stop)
                for value in range(stmt.start, stmt.stop):
                    k = self.defcount.get(stmt.var, 0)
                    self.defcount[stmt.var] = k + 1
                    const_net = self.net_name(f"{flatten_name(stmt.var)}__{k}")
                    self.netlist.add(Net(const_net, width, expr.Lit(value, width),
                                         "wire", self.path))
                    self.loops[stmt.var] = (value, width, const_net)
                    self.walk(stmt.body, conds)
                del self.loops[stmt.var]
            elif isinstance(stmt, Block):
                self.walk(stmt.body, conds)

    def lower_assign(self, stmt: Assign, conds: list[expr.ExprAst]):
        ordinal = self.ordinals.get(stmt.sid, 0)
        self.ordinals[stmt.sid] = ordinal + 1
        target = stmt.target
        annotation = Annotation(
            self.path, stmt.loc, ordinal, _and_reduce(conds), self.build_mapping(),
        )
        self.annset.annotations.append(annotation)
        rhs = self.lower_expr(stmt.value)
        if self.block_key is not None and self.block_key[0] == "seq":
            width = self.info.regs[target].width
            prev = self.pending.get(target)
            base = expr.Ident(prev) if prev else expr.Ident(self.signal_net(target))
            driver = expr.Ternary(_and_reduce(conds), rhs, base) if conds else rhs
            k = self.defcount.get(target, 0)
            self.defcount[target] = k + 1
            net_name = self.net_name(f"{flatten_name(target)}__{k}")
            self.netlist.add(Net(net_name, width, driver, "wire", self.path))
            self.pending[target] = net_name
            annotation.target_net = net_name
            return
        width = self.info.width_of(target)
        prev = self.versions.get(target)
        if conds:
            if prev is None:
                raise LoweringError(f"{target!r} conditionally assigned before definition")
            driver = expr.Ternary(_and_reduce(conds), rhs, expr.Ident(prev))
        else:
            driver = rhs
        k = self.defcount.get(target, 0)
        self.defcount[target] = k + 1
        net_name = self.net_name(f"{flatten_name(target)}__{k}")
        self.netlist.add(Net(net_name, width, driver, "wire", self.path))
        self.versions[target] = net_name
        annotation.target_net = net_name
        if target not in self.block_defined:
            self.block_defined.append(target)

    def build_mapping(self) -> list[tuple[str, str]]:
        """Pre-statement variable mapping: the most recent SSA version of each
        block variable, loop constants, then referenced module signals."""
        entries: list[tuple[str, str]] = []
        block_driven = {
            name for name, drv in self.info.driver_of.items() if drv == self.block_key
        }
        for name in self.block_defined:
            entries.append((name, self.versions[name]))
        for var, (_value, _width, const_net) in self.loops.items():
            entries.append((var, const_net))
        for name in self.info.block_refs.get(self.block_key, []):
            if name in block_driven:
                continue
            port = self.info.ports.get(name)
            if port is not None and port.size is not None:
                for i in range(port.size):
                    entries.append((f"{name}[{i}]", self.elem_net(name, i)))
            else:
                entries.append((name, self.signal_net(name)))
        return entries

    # --- expressions ---

    def lower_expr(self, e: SrcExpr, module_level: bool = False) -> expr.ExprAst:
        if isinstance(e, Num):
            return expr.Lit(e.value, max(1, e.value.bit_length()))
        if isinstance(e, Ref):
            name = e.name
            if not module_level and name in self.loops:
                value, width, _net = self.loops[name]
                return expr.Lit(value, width)
            if not module_level and name in self.versions \
                    and self.info.driver_of.get(name) == self.block_key:
                return expr.Ident(self.versions[name])
            return expr.Ident(self.signal_net(name))
        if isinstance(e, IndexRef):
            idx = self.fold_index(e.index)
            return expr.Ident(self.elem_net(e.name, idx))
        if isinstance(e, UnaryOp):
            return expr.Unary(e.op, self.lower_expr(e.operand, module_level))
        if isinstance(e, BinOp):
            return expr.Binary(e.op, self.lower_expr(e.left, module_level),
                               self.lower_expr(e.right, module_level))
        if isinstance(e, CondOp):
            return expr.Ternary(self.lower_expr(e.cond, module_level),
                                self.lower_expr(e.then, module_level),
                                self.lower_expr(e.other, module_level))
        raise TypeError(f"not an expression: {e!r}")

    def fold_index(self, e: SrcExpr) -> int:
        if isinstance(e, Num):
            return e.value
        if isinstance(e, Ref) and e.name in self.loops:
            return self.loops[e.name][0]
        if isinstance(e, BinOp):
            a, b = self.fold_index(e.left), self.fold_index(e.right)
            ops = {"+": a + b, "-": a - b, "*": a * b}
            if e.op in ops:
                return ops[e.op]
            if e.op == "/" and b:
                return a // b
            if e.op == "%" and b:
                return a % b
        if isinstance(e, UnaryOp):
            v = self.fold_index(e.operand)
            return {"-": -v, "~": ~v, "!": int(not v)}[e.op]
        raise LoweringError(f"array index is not constant at {e.loc}")


def unroll_and_ssa(program: SourceProgram) -> tuple[Netlist, AnnotationSet]:
    """Lower a validated program to (Netlist, AnnotationSet)."""
    infos = validate(program)
    top_info = infos[program.top]
    netlist = Netlist(top=program.top, source_file=program.file)
    annset = AnnotationSet()
    top_mod = program.module(program.top)
    _InstanceLowerer(program, infos, netlist, annset, program.top, top_mod, {}).lower()
    netlist.clocks = [
        f"{program.top}.{flatten_name(c)}"
        for c in sorted(top_info.clock_ports)
    ]
    netlist.check_acyclic()
    return netlist, annset
