"""Pretty printer that preserves the line structure of the original IR.

Constructs are emitted on the source line recorded in their SourceLoc, so a
printed program reparses to an IR equal up to column positions. Closing
braces carry no location and are placed on the current line; the next
construct re-synchronizes by advancing to its own line.
"""

from __future__ import annotations

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
    SourceProgram,
    SrcExpr,
    Stmt,
    UnaryOp,
)

_LEVELS = [
    ["||"], ["&&"], ["|"], ["^"], ["&"], ["==", "!="],
    ["<=", ">=", "<", ">"], ["<<", ">>"], ["+", "-"], ["*", "/", "%"],
]
_LEVEL_OF = {op: i for i, lvl in enumerate(_LEVELS) for op in lvl}


def format_expr(expr: SrcExpr) -> str:
    return _expr(expr, -1)


def _expr(e: SrcExpr, outer: int) -> str:
    if isinstance(e, Num):
        return str(e.value)
    if isinstance(e, Ref):
        return e.name
    if isinstance(e, IndexRef):
        return f"{e.name}[{_expr(e.index, -1)}]"
    if isinstance(e, UnaryOp):
        return f"{e.op}{_expr(e.operand, len(_LEVELS))}"
    if isinstance(e, BinOp):
        lvl = _LEVEL_OF[e.op]
        text = f"{_expr(e.left, lvl - 1)} {e.op} {_expr(e.right, lvl)}"
        return f"({text})" if lvl <= outer else text
    if isinstance(e, CondOp):
        return f"({_expr(e.cond, 0)} ? {_expr(e.then, -1)} : {_expr(e.other, -1)})"
    raise TypeError(f"not an expression: {e!r}")


class _Emitter:
    def __init__(self):
        self.lines: list[str] = [""]
        self.line = 1
        self.depth = 0

    def advance_to(self, line: int):
        while self.line < line:
            self.lines.append("")
            self.line += 1

    def emit(self, text: str):
        current = self.lines[-1]
        if current == "":
            self.lines[-1] = "  " * self.depth + text
        else:
            self.lines[-1] = current + " " + text

    def newline(self):
        self.lines.append("")
        self.line += 1

    def text(self) -> str:
        return "\n".join(self.lines).rstrip() + "\n"


def pretty_print(program: SourceProgram) -> str:
    em = _Emitter()
    for mod in program.modules:
        _module(em, mod)
    return em.text()


def _module(em: _Emitter, mod: ModuleDef):
    em.advance_to(mod.loc.line)
    em.emit(f"module {mod.name} {{")
    em.depth += 1
    for port in mod.ports:
        em.advance_to(port.loc.line)
        size = f"[{port.size}]" if port.size is not None else ""
        em.emit(f"{port.direction} {port.name}{size}: {port.width};")
    for reg in mod.registers:
        em.advance_to(reg.loc.line)
        reset = f" = {reg.reset}" if reg.reset is not None else ""
        em.emit(f"reg {reg.name}: {reg.width} @{reg.clock}{reset};")
    for inst in mod.instances:
        em.advance_to(inst.loc.line)
        bindings = ", ".join(f"{b.port} = {format_expr(b.value)}" for b in inst.bindings)
        em.emit(f"inst {inst.name}: {inst.module}({bindings});")
    for blk in mod.combs:
        em.advance_to(blk.loc.line)
        em.emit("comb {")
        _body(em, blk.body)
        em.emit("}")
    for blk in mod.seqs:
        em.advance_to(blk.loc.line)
        em.emit(f"seq ({blk.clock}) {{")
        _body(em, blk.body)
        em.emit("}")
    em.depth -= 1
    em.newline()
    em.emit("}")


def _body(em: _Emitter, body: list[Stmt]):
    em.depth += 1
    for stmt in body:
        _stmt(em, stmt)
    em.depth -= 1


def _stmt(em: _Emitter, stmt: Stmt):
    em.advance_to(stmt.loc.line)
    if isinstance(stmt, Assign):
        em.emit(f"{stmt.target} = {format_expr(stmt.value)};")
    elif isinstance(stmt, If):
        em.emit(f"if {format_expr(stmt.cond)} {{")
        _body(em, stmt.then)
        em.emit("}")
        if stmt.orelse:
            if len(stmt.orelse) == 1 and isinstance(stmt.orelse[0], If):
                em.emit("else")
                _stmt(em, stmt.orelse[0])
            else:
                em.emit("else {")
                _body(em, stmt.orelse)
                em.emit("}")
    elif isinstance(stmt, For):
        em.emit(f"for {stmt.var} in {stmt.start}..{stmt.stop} {{")
        _body(em, stmt.body)
        em.emit("}")
    elif isinstance(stmt, Block):
        em.emit("{")
        _body(em, stmt.body)
        em.emit("}")
