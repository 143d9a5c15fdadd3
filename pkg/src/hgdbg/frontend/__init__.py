"""Mini-HDL frontend: parser, static analysis, reference interpreter."""

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
    MiniHdlError,
    ModuleDef,
    Num,
    ParseError,
    Port,
    Ref,
    RegDecl,
    SemanticError,
    SeqBlock,
    SourceLoc,
    SourceProgram,
    UnaryOp,
    signature,
    walk_stmts,
)
from .interp import CycleRecord, ExecutionTrace, InterpError, StmtExec, interpret
from .parser import parse
from .pretty import format_expr, pretty_print
from .validate import ModuleInfo, expr_width, loop_var_width, validate

__all__ = [
    "Assign", "BinOp", "Binding", "Block", "CombBlock", "CondOp", "CycleRecord",
    "ExecutionTrace", "For", "If", "IndexRef", "Instance", "InterpError",
    "MiniHdlError", "ModuleDef", "ModuleInfo", "Num", "ParseError", "Port",
    "Ref", "RegDecl", "SemanticError", "SeqBlock", "SourceLoc", "SourceProgram",
    "StmtExec", "UnaryOp", "expr_width", "format_expr", "interpret",
    "loop_var_width", "parse", "pretty_print", "signature", "validate",
    "walk_stmts",
]
