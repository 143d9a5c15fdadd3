"""Human-inspectable textual form of a flat netlist.

The output is deterministic (no timestamps, stable ordering), so identical
netlists emit identical bytes; golden tests rely on that. Mux drivers are
rendered as `select(cond, then, else)` to make the flattened control flow
obvious.
"""

from __future__ import annotations

from ..expr import Binary, ExprAst, Ident, Lit, Ternary, Unary
from .netlist import Netlist

_LEVELS = [
    ["||"], ["&&"], ["|"], ["^"], ["&"], ["==", "!="],
    ["<=", ">=", "<", ">"], ["<<", ">>"], ["+", "-"], ["*", "/", "%"],
]
_LEVEL_OF = {op: i for i, lvl in enumerate(_LEVELS) for op in lvl}


def _render(e: ExprAst, outer: int) -> str:
    if isinstance(e, Lit):
        if e.width != max(1, e.value.bit_length()):
            return f"{e.width}'d{e.value}"
        return str(e.value)
    if isinstance(e, Ident):
        return e.key
    if isinstance(e, Unary):
        return f"{e.op}{_render(e.operand, len(_LEVELS))}"
    if isinstance(e, Binary):
        lvl = _LEVEL_OF[e.op]
        text = f"{_render(e.left, lvl - 1)} {e.op} {_render(e.right, lvl)}"
        return f"({text})" if lvl <= outer else text
    if isinstance(e, Ternary):
        return f"select({_render(e.cond, -1)}, {_render(e.then, -1)}, {_render(e.other, -1)})"
    raise TypeError(f"not an expression: {e!r}")


def emit_verilog_like(netlist: Netlist) -> str:
    lines = [f"// flat netlist: top = {netlist.top}"]
    lines.append(f"// source: {netlist.source_file}")
    lines.append(f"module {netlist.top};")
    for net in netlist.nets.values():
        if net.kind == "input":
            lines.append(f"  input [{net.width - 1}:0] {net.name};")
    for net in netlist.nets.values():
        if net.kind == "reg":
            reg = netlist.registers[net.name]
            reset = f" reset={reg.reset}" if reg.reset is not None else ""
            lines.append(
                f"  reg [{net.width - 1}:0] {net.name}"
                f" @posedge({reg.clock}) next={reg.next_net}{reset};"
            )
    for net in netlist.nets.values():
        if net.kind in ("wire", "output"):
            keyword = "output" if net.kind == "output" else "wire"
            driver = _render(net.driver, -1) if net.driver is not None else "/* undriven */"
            lines.append(f"  {keyword} [{net.width - 1}:0] {net.name} = {driver};")
    lines.append("endmodule")
    return "\n".join(lines) + "\n"
