"""Source-level IR for the mini-HDL language.

Every statement and expression node carries the SourceLoc of its first
token; breakpoints are keyed on those locations, so the parser must not
invent or move them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union


@dataclass(frozen=True)
class SourceLoc:
    file: str
    line: int  # 1-based
    col: int  # 1-based

    def __str__(self) -> str:
        return f"{self.file}:{self.line}:{self.col}"


class MiniHdlError(Exception):
    """Base for all compile-time errors; carries a source location."""

    def __init__(self, message: str, loc: Optional[SourceLoc] = None):
        self.loc = loc
        self.message = message
        super().__init__(f"{loc}: {message}" if loc else message)


class ParseError(MiniHdlError):
    pass


class SemanticError(MiniHdlError):
    pass


# --- Expressions ---

@dataclass
class Num:
    value: int
    loc: SourceLoc


@dataclass
class Ref:
    name: str  # dotted bundle-member names allowed, e.g. io.a
    loc: SourceLoc


@dataclass
class IndexRef:
    name: str
    index: "SrcExpr"
    loc: SourceLoc


@dataclass
class UnaryOp:
    op: str
    operand: "SrcExpr"
    loc: SourceLoc


@dataclass
class BinOp:
    op: str
    left: "SrcExpr"
    right: "SrcExpr"
    loc: SourceLoc


@dataclass
class CondOp:
    cond: "SrcExpr"
    then: "SrcExpr"
    other: "SrcExpr"
    loc: SourceLoc


SrcExpr = Union[Num, Ref, IndexRef, UnaryOp, BinOp, CondOp]


# --- Statements ---

@dataclass
class Assign:
    target: str
    value: SrcExpr
    loc: SourceLoc
    sid: int = -1  # unique per program, assigned by the parser


@dataclass
class If:
    cond: SrcExpr
    then: list["Stmt"]
    orelse: list["Stmt"]
    loc: SourceLoc
    sid: int = -1


@dataclass
class For:
    var: str
    start: int
    stop: int  # exclusive
    body: list["Stmt"]
    loc: SourceLoc
    sid: int = -1


@dataclass
class Block:
    body: list["Stmt"]
    loc: SourceLoc
    sid: int = -1


Stmt = Union[Assign, If, For, Block]


# --- Declarations ---

@dataclass
class Port:
    name: str
    direction: str  # "in" | "out"
    width: int
    size: Optional[int]  # array length; None for scalars
    loc: SourceLoc


@dataclass
class RegDecl:
    name: str
    width: int
    clock: str
    reset: Optional[int]
    loc: SourceLoc


@dataclass
class Binding:
    port: str
    value: SrcExpr
    loc: SourceLoc


@dataclass
class Instance:
    name: str
    module: str
    bindings: list[Binding]
    loc: SourceLoc


@dataclass
class CombBlock:
    body: list[Stmt]
    loc: SourceLoc


@dataclass
class SeqBlock:
    clock: str
    body: list[Stmt]
    loc: SourceLoc


@dataclass
class ModuleDef:
    name: str
    ports: list[Port]
    registers: list[RegDecl]
    instances: list[Instance]
    combs: list[CombBlock]
    seqs: list[SeqBlock]
    loc: SourceLoc

    def port(self, name: str) -> Optional[Port]:
        for p in self.ports:
            if p.name == name:
                return p
        return None

    def register(self, name: str) -> Optional[RegDecl]:
        for r in self.registers:
            if r.name == name:
                return r
        return None

    @property
    def in_ports(self) -> list[Port]:
        return [p for p in self.ports if p.direction == "in"]

    @property
    def out_ports(self) -> list[Port]:
        return [p for p in self.ports if p.direction == "out"]


@dataclass
class SourceProgram:
    modules: list[ModuleDef]
    top: str
    file: str

    def module(self, name: str) -> ModuleDef:
        for m in self.modules:
            if m.name == name:
                return m
        raise KeyError(name)


# --- Traversal helpers ---

def walk_stmts(stmts: list[Stmt]):
    """Yield every statement in a body, depth-first, in source order."""
    for stmt in stmts:
        yield stmt
        if isinstance(stmt, If):
            yield from walk_stmts(stmt.then)
            yield from walk_stmts(stmt.orelse)
        elif isinstance(stmt, (For, Block)):
            yield from walk_stmts(stmt.body)


def walk_exprs(expr: SrcExpr):
    yield expr
    if isinstance(expr, IndexRef):
        yield from walk_exprs(expr.index)
    elif isinstance(expr, UnaryOp):
        yield from walk_exprs(expr.operand)
    elif isinstance(expr, BinOp):
        yield from walk_exprs(expr.left)
        yield from walk_exprs(expr.right)
    elif isinstance(expr, CondOp):
        yield from walk_exprs(expr.cond)
        yield from walk_exprs(expr.then)
        yield from walk_exprs(expr.other)


def stmt_exprs(stmt: Stmt) -> list[SrcExpr]:
    if isinstance(stmt, Assign):
        return [stmt.value]
    if isinstance(stmt, If):
        return [stmt.cond]
    return []


def expr_names(expr: SrcExpr) -> list[str]:
    """Base names referenced by an expression, in first-appearance order."""
    names: list[str] = []
    for node in walk_exprs(expr):
        if isinstance(node, (Ref, IndexRef)) and node.name not in names:
            names.append(node.name)
    return names


def signature(node, with_columns: bool = True):
    """A comparable structural summary of the IR.

    Used by round-trip tests: with_columns=False compares programs up to
    SourceLoc column positions (lines and structure still significant).
    """
    if isinstance(node, SourceLoc):
        return (node.file, node.line, node.col) if with_columns else (node.file, node.line)
    if isinstance(node, list):
        return tuple(signature(x, with_columns) for x in node)
    if hasattr(node, "__dataclass_fields__"):
        items = []
        for name in node.__dataclass_fields__:
            if name == "sid":
                continue
            items.append(signature(getattr(node, name), with_columns))
        return (type(node).__name__, tuple(items))
    return node
