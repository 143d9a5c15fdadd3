"""Compile the example design and look at what the compiler produced.

The guarded accumulation loop in sum.mh is the interesting part: unrolling
plus SSA turns one source statement into two netlist muxes, and the symbol
table records one breakpoint per unrolled copy, each with the enable
condition that tells the debugger when that copy actually 'executed'.

Run:  python3 demos/01_compile_and_inspect.py
"""

from pathlib import Path

from hgdbg import expr
from hgdbg.frontend import parse
from hgdbg.lowering import compile_program, emit_verilog_like
from hgdbg.symtab import breakpoints_at, scope_of

HERE = Path(__file__).parent
source = (HERE / "sum.mh").read_text()
program = parse(source, "sum.mh")

netlist, annotations, table = compile_program(program, "debug")

print("=== flat netlist ===")
print(emit_verilog_like(netlist))

print("=== annotations (statement occurrences) ===")
for ann in annotations.annotations:
    print(f"{ann.loc} ordinal {ann.ordinal}: enable = {expr.to_text(ann.enable)}")
    for source_name, net in ann.mapping:
        print(f"    {source_name:10} -> {net}")

print()
print("=== breakpoints on the accumulation line (line 9) ===")
for row in breakpoints_at(table, "sum.mh", 9):
    print(f"breakpoint #{row.id} ordinal {row.ordinal}: enable = {row.enable}")
    scope = ", ".join(f"{name}={var.rtl_name}" for name, var in scope_of(table, row.id))
    print(f"    scope: {scope}")

print()
print("Note how `sum` maps to acc.sum__0 at ordinal 0 (the initialization)")
print("and to acc.sum__1 at ordinal 1 (the first partial sum): the SSA")
print("transform is what makes overwritten intermediate values observable.")
