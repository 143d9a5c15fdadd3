"""Netlist optimization: constant folding, constant/alias propagation, and
dead-net elimination.

Two invariants constrain every rewrite:

* width preservation - replacing a subexpression must not change the width
  the enclosing expression computes with (results wrap modulo 2^width), so
  identity folds only fire when the dropped literal cannot widen the result;
* unknown preservation in enable conditions - enables are evaluated over
  trace values that may be x/z, where dropping a variable operand (e.g.
  `v && 0` -> `0`) would change unknown propagation and therefore breakpoint
  firing. Drivers are only ever evaluated by the cycle simulator on fully
  known values, so they may use the aggressive rules.

`debug` level performs no optimization and preserves every net.
"""

from __future__ import annotations

from typing import Optional

from .. import expr
from ..expr import Binary, ExprAst, Ident, Lit, Ternary, Unary, Value
from .netlist import Annotation, AnnotationSet, Net, Netlist, Register


def _expr_value_width(e: ExprAst, width_of) -> int:
    if isinstance(e, Lit):
        return e.width
    if isinstance(e, Ident):
        return width_of(e.key)
    if isinstance(e, Unary):
        return 1 if e.op == "!" else _expr_value_width(e.operand, width_of)
    if isinstance(e, Binary):
        if e.op in ("==", "!=", "<", "<=", ">", ">=", "&&", "||"):
            return 1
        left = _expr_value_width(e.left, width_of)
        if e.op in ("<<", ">>"):
            return left
        return max(left, _expr_value_width(e.right, width_of))
    if isinstance(e, Ternary):
        return max(_expr_value_width(e.then, width_of), _expr_value_width(e.other, width_of))
    raise TypeError(f"not an expression: {e!r}")


def fold(e: ExprAst, width_of, aggressive: bool) -> ExprAst:
    """Bottom-up constant folding. Aggressive mode may drop variable
    operands (annihilators, constant mux selects); both modes may drop
    constant operands and fold all-constant nodes."""
    if isinstance(e, (Lit, Ident)):
        return e
    if isinstance(e, Unary):
        operand = fold(e.operand, width_of, aggressive)
        if isinstance(operand, Lit):
            v = expr.eval_expr(Unary(e.op, operand), _no_lookup)
            if v.known:
                return Lit(v.bits, v.width)
        return Unary(e.op, operand)
    if isinstance(e, Binary):
        left = fold(e.left, width_of, aggressive)
        right = fold(e.right, width_of, aggressive)
        if isinstance(left, Lit) and isinstance(right, Lit):
            v = expr.eval_expr(Binary(e.op, left, right), _no_lookup)
            if v.known:
                return Lit(v.bits, v.width)
            return Binary(e.op, left, right)  # division by zero: keep
        folded = _identity_fold(e.op, left, right, width_of, aggressive)
        if folded is not None:
            return folded
        return Binary(e.op, left, right)
    if isinstance(e, Ternary):
        cond = fold(e.cond, width_of, aggressive)
        then = fold(e.then, width_of, aggressive)
        other = fold(e.other, width_of, aggressive)
        if aggressive and isinstance(cond, Lit):
            width = max(_expr_value_width(then, width_of), _expr_value_width(other, width_of))
            picked = then if cond.value else other
            if _expr_value_width(picked, width_of) == width:
                return picked
        if aggressive and then == other \
                and _expr_value_width(then, width_of) == _expr_value_width(other, width_of):
            return then
        return Ternary(cond, then, other)
    raise TypeError(f"not an expression: {e!r}")


def _no_lookup(name: str) -> Value:
    raise KeyError(name)


def _identity_fold(op: str, left: ExprAst, right: ExprAst,
                   width_of, aggressive: bool) -> Optional[ExprAst]:
    def is_const(e, value) -> bool:
        return isinstance(e, Lit) and e.value == value

    width = lambda e: _expr_value_width(e, width_of)
    result_width = max(width(left), width(right))

    # Dropping a constant operand preserves unknown propagation; it is width
    # safe only when the kept operand already has the full result width.
    if op in ("+", "|", "^"):
        if is_const(right, 0) and width(left) == result_width:
            return left
        if is_const(left, 0) and width(right) == result_width:
            return right
    if op == "-" and is_const(right, 0) and width(left) == result_width:
        return left
    if op in ("<<", ">>") and is_const(right, 0):
        return left
    if op == "*":
        if is_const(right, 1) and width(left) == result_width:
            return left
        if is_const(left, 1) and width(right) == result_width:
            return right
    if aggressive:
        # Annihilators drop a variable operand: driver-only.
        if op in ("*", "&") and (is_const(left, 0) or is_const(right, 0)):
            return Lit(0, result_width)
        if op == "&&" and (is_const(left, 0) or is_const(right, 0)):
            return Lit(0, 1)
        if op == "||" and ((isinstance(left, Lit) and left.value) or
                           (isinstance(right, Lit) and right.value)):
            return Lit(1, 1)
    return None


def _substitute(e: ExprAst, repl: dict[str, ExprAst]) -> ExprAst:
    if isinstance(e, Lit):
        return e
    if isinstance(e, Ident):
        return repl.get(e.key, e)
    if isinstance(e, Unary):
        return Unary(e.op, _substitute(e.operand, repl))
    if isinstance(e, Binary):
        return Binary(e.op, _substitute(e.left, repl), _substitute(e.right, repl))
    if isinstance(e, Ternary):
        return Ternary(_substitute(e.cond, repl), _substitute(e.then, repl),
                       _substitute(e.other, repl))
    raise TypeError(f"not an expression: {e!r}")


def optimize(netlist: Netlist, annotations: AnnotationSet,
             level: str) -> tuple[Netlist, AnnotationSet]:
    """Apply `optimized` transforms or return the inputs untouched (`debug`)."""
    if level == "debug":
        return netlist, annotations
    if level != "optimized":
        raise ValueError(f"unknown optimization level {level!r}")

    widths = {name: net.width for name, net in netlist.nets.items()}
    width_of = widths.__getitem__

    drivers: dict[str, Optional[ExprAst]] = {}
    for name, net in netlist.nets.items():
        drivers[name] = None if net.driver is None else fold(net.driver, width_of, True)

    # Constant and alias propagation to a fixpoint. Reads of a net whose
    # driver is a literal (or an equal-width alias) are rewritten in place;
    # the bypassed nets become dead unless they are interface roots.
    replacements: dict[str, ExprAst] = {}
    while True:
        new: dict[str, ExprAst] = {}
        for name, driver in drivers.items():
            if name in replacements or driver is None:
                continue
            net = netlist.nets[name]
            if net.kind == "reg":
                continue
            if isinstance(driver, Lit):
                mask = (1 << net.width) - 1
                new[name] = Lit(driver.value & mask, net.width)
            elif isinstance(driver, Ident) and widths.get(driver.key) == net.width:
                new[name] = driver
        if not new:
            break
        replacements.update(new)
        # Collapse alias chains so substitution is idempotent.
        for name, target in list(replacements.items()):
            seen = {name}
            while isinstance(target, Ident) and target.key in replacements \
                    and target.key not in seen:
                seen.add(target.key)
                target = replacements[target.key]
            replacements[name] = target
        for name, driver in drivers.items():
            if driver is not None:
                drivers[name] = fold(_substitute(driver, replacements), width_of, True)

    # Dead-net elimination: interface and state nets are roots.
    roots = set(netlist.clocks)
    for name, net in netlist.nets.items():
        if net.kind in ("input", "output", "reg"):
            roots.add(name)
    for reg in netlist.registers.values():
        roots.add(reg.next_net)
        roots.add(reg.clock)

    live: set[str] = set()
    stack = sorted(roots)
    while stack:
        name = stack.pop()
        if name in live:
            continue
        live.add(name)
        driver = drivers.get(name)
        if driver is not None:
            for dep in expr.identifiers(driver):
                if dep not in live:
                    stack.append(dep)

    out = Netlist(top=netlist.top, source_file=netlist.source_file)
    out.instances = list(netlist.instances)
    out.clocks = list(netlist.clocks)
    for name, net in netlist.nets.items():
        if name in live:
            out.add(Net(name, net.width, drivers[name], net.kind, net.instance))
    for name, reg in netlist.registers.items():
        out.registers[name] = Register(reg.name, reg.width, reg.clock,
                                       reg.next_net, reg.reset, reg.instance)

    # Annotations: enables see the same substitutions (with the conservative
    # fold rules); mappings to removed nets disappear.
    new_anns = AnnotationSet(dropped=annotations.dropped)
    for ann in annotations.annotations:
        enable = fold(_substitute(ann.enable, replacements), width_of, False)
        mapping = [(src, net) for src, net in ann.mapping if net in out.nets]
        # An alias-forwarded statement still exists, its value just lives in
        # another net; a constant-propagated one was eliminated outright.
        target = ann.target_net
        resolved = replacements.get(target)
        if isinstance(resolved, Ident):
            target = resolved.key
        elif isinstance(resolved, Lit):
            target = ""
        new_anns.annotations.append(Annotation(ann.instance, ann.loc, ann.ordinal,
                                               enable, mapping, target))
    for inst, signals in annotations.instance_signals.items():
        new_anns.instance_signals[inst] = [
            (src, net) for src, net in signals if net in out.nets
        ]
    return out, new_anns
