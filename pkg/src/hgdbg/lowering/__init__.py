"""Lowering: SSA transform, optimization, symbol collection, netlist text."""

from .netlist import Annotation, AnnotationSet, LoweringError, Net, Netlist, Register
from .optimize import optimize
from .ssa import unroll_and_ssa
from .symbols import collect_symbols
from .verilog import emit_verilog_like


def compile_program(program, level: str = "debug"):
    """Convenience pipeline: lower, optimize, collect.

    Returns (netlist, annotations, symbol table).
    """
    netlist, annotations = unroll_and_ssa(program)
    netlist, annotations = optimize(netlist, annotations, level)
    table = collect_symbols(netlist, annotations)
    return netlist, annotations, table


__all__ = [
    "Annotation", "AnnotationSet", "LoweringError", "Net", "Netlist", "Register",
    "collect_symbols", "compile_program", "emit_verilog_like", "optimize",
    "unroll_and_ssa",
]
