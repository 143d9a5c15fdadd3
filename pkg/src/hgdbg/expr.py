"""Condition and expression language shared across the debugger.

The same grammar serves three customers: breakpoint enable conditions stored
in symbol tables, user-supplied conditional breakpoints, and interactive
`evaluate` requests. Netlist driver expressions reuse the same AST so that a
single evaluator covers simulation and condition checking.

Semantics are unsigned bit-vector arithmetic: binary arithmetic wraps modulo
2^width with the result width being the max of the operand widths;
comparisons and logical operators yield 1-bit values. Division or modulo by
zero yields an unknown value, and unknowns propagate strictly (no
short-circuiting), so an unknown anywhere poisons the result.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Union


class ExprError(Exception):
    """Syntax error in an expression, with a character offset."""

    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} (at offset {pos})")
        self.pos = pos


class EvalError(Exception):
    """Raised when evaluation cannot proceed (e.g. unresolved identifier)."""


@dataclass(frozen=True)
class Value:
    """An unsigned bit-vector value of a fixed width.

    `known` is False for x/z values coming out of traces; the magnitude of an
    unknown value is meaningless and normalized to 0.
    """

    width: int
    bits: int
    known: bool = True

    def __post_init__(self):
        if self.width < 1:
            raise ValueError(f"value width must be >= 1, got {self.width}")
        if self.known and not 0 <= self.bits < (1 << self.width):
            raise ValueError(f"value {self.bits} out of range for width {self.width}")

    @staticmethod
    def of(bits: int, width: Optional[int] = None) -> "Value":
        if width is None:
            width = max(1, bits.bit_length())
        return Value(width, bits & ((1 << width) - 1))

    @staticmethod
    def unknown(width: int = 1) -> "Value":
        return Value(width, 0, known=False)

    def __str__(self) -> str:
        return str(self.bits) if self.known else "x"


def truthy(v: Value) -> bool:
    """True iff the value is known and nonzero. Unknown never triggers."""
    return v.known and v.bits != 0


# Shared singletons: comparison/logical results and per-width unknowns are
# constructed extremely often on the breakpoint evaluation hot path.
V_TRUE = Value(1, 1)
V_FALSE = Value(1, 0)
_UNKNOWNS: dict[int, Value] = {}


def unknown(width: int) -> Value:
    v = _UNKNOWNS.get(width)
    if v is None:
        v = _UNKNOWNS[width] = Value(width, 0, known=False)
    return v


# --- AST ---

@dataclass(frozen=True)
class Lit:
    value: int
    width: int


@dataclass(frozen=True)
class Ident:
    """A hierarchical (dot-separated) name with an optional constant index."""

    name: str
    index: Optional[int] = None

    @property
    def key(self) -> str:
        return self.name if self.index is None else f"{self.name}[{self.index}]"


@dataclass(frozen=True)
class Unary:
    op: str  # ~ ! -
    operand: "ExprAst"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "ExprAst"
    right: "ExprAst"


@dataclass(frozen=True)
class Ternary:
    cond: "ExprAst"
    then: "ExprAst"
    other: "ExprAst"


ExprAst = Union[Lit, Ident, Unary, Binary, Ternary]

TRUE = Lit(1, 1)
FALSE = Lit(0, 1)

# Binary operators by precedence level, loosest first. && and || bind looser
# than comparisons, which bind looser than shifts and arithmetic (C-like).
_BINARY_LEVELS = [
    ["||"],
    ["&&"],
    ["|"],
    ["^"],
    ["&"],
    ["==", "!="],
    ["<=", ">=", "<", ">"],
    ["<<", ">>"],
    ["+", "-"],
    ["*", "/", "%"],
]

_PUNCT = sorted(
    {op for level in _BINARY_LEVELS for op in level}
    | {"~", "!", "-", "?", ":", "(", ")", "[", "]"},
    key=len,
    reverse=True,
)


class _Lexer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.tokens: list[tuple[str, str, int]] = []
        self._scan()
        self.i = 0

    def _scan(self):
        text = self.text
        n = len(text)
        pos = 0
        while pos < n:
            ch = text[pos]
            if ch.isspace():
                pos += 1
                continue
            if ch.isdigit():
                start = pos
                if text.startswith("0x", pos) or text.startswith("0X", pos):
                    pos += 2
                    while pos < n and (text[pos].isdigit() or text[pos] in "abcdefABCDEF"):
                        pos += 1
                    if pos == start + 2:
                        raise ExprError("malformed hex literal", start)
                    self.tokens.append(("num", text[start:pos], start))
                else:
                    while pos < n and text[pos].isdigit():
                        pos += 1
                    # Sized literal, Verilog style: <width>'d<value> / <width>'h<value>.
                    if pos < n and text[pos] == "'" and pos + 1 < n and text[pos + 1] in "dh":
                        pos += 2
                        vstart = pos
                        while pos < n and (text[pos].isdigit() or text[pos] in "abcdefABCDEF"):
                            pos += 1
                        if pos == vstart:
                            raise ExprError("malformed sized literal", start)
                    self.tokens.append(("num", text[start:pos], start))
                continue
            if ch.isalpha() or ch == "_":
                start = pos
                while pos < n and (text[pos].isalnum() or text[pos] in "_.$"):
                    pos += 1
                name = text[start:pos].rstrip(".")
                pos = start + len(name)
                self.tokens.append(("name", name, start))
                continue
            for punct in _PUNCT:
                if text.startswith(punct, pos):
                    self.tokens.append(("op", punct, pos))
                    pos += len(punct)
                    break
            else:
                raise ExprError(f"unexpected character {ch!r}", pos)
        self.tokens.append(("eof", "", n))

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.i]

    def next(self) -> tuple[str, str, int]:
        tok = self.tokens[self.i]
        if tok[0] != "eof":
            self.i += 1
        return tok

    def accept(self, value: str) -> bool:
        kind, text, _ = self.peek()
        if kind == "op" and text == value:
            self.next()
            return True
        return False

    def expect(self, value: str):
        kind, text, pos = self.peek()
        if kind != "op" or text != value:
            raise ExprError(f"expected {value!r}, found {text or 'end of input'!r}", pos)
        self.next()


def parse_expr(text: str) -> ExprAst:
    """Parse an expression with C-like precedence. Raises ExprError."""
    lexer = _Lexer(text)
    ast = _parse_ternary(lexer)
    kind, tok, pos = lexer.peek()
    if kind != "eof":
        raise ExprError(f"trailing input {tok!r}", pos)
    return ast


def _parse_ternary(lx: _Lexer) -> ExprAst:
    cond = _parse_binary(lx, 0)
    if lx.accept("?"):
        then = _parse_ternary(lx)
        lx.expect(":")
        other = _parse_ternary(lx)
        return Ternary(cond, then, other)
    return cond


def _parse_binary(lx: _Lexer, level: int) -> ExprAst:
    if level >= len(_BINARY_LEVELS):
        return _parse_unary(lx)
    left = _parse_binary(lx, level + 1)
    while True:
        kind, tok, _ = lx.peek()
        if kind == "op" and tok in _BINARY_LEVELS[level]:
            lx.next()
            right = _parse_binary(lx, level + 1)
            left = Binary(tok, left, right)
        else:
            return left


def _parse_unary(lx: _Lexer) -> ExprAst:
    kind, tok, _ = lx.peek()
    if kind == "op" and tok in ("~", "!", "-"):
        lx.next()
        return Unary(tok, _parse_unary(lx))
    return _parse_primary(lx)


def _parse_primary(lx: _Lexer) -> ExprAst:
    kind, tok, pos = lx.next()
    if kind == "num":
        if "'" in tok:
            width_text, rest = tok.split("'", 1)
            width = int(width_text)
            value = int(rest[1:], 16 if rest[0] == "h" else 10)
            if width < 1 or value >= (1 << width):
                raise ExprError(f"literal {value} does not fit in {width} bits", pos)
            return Lit(value, width)
        value = int(tok, 16) if tok.lower().startswith("0x") else int(tok)
        return Lit(value, max(1, value.bit_length()))
    if kind == "name":
        if lx.accept("["):
            ikind, itok, ipos = lx.next()
            if ikind != "num":
                raise ExprError("index must be a constant integer", ipos)
            lx.expect("]")
            return Ident(tok, int(itok, 0))
        return Ident(tok)
    if kind == "op" and tok == "(":
        inner = _parse_ternary(lx)
        lx.expect(")")
        return inner
    raise ExprError(f"expected an expression, found {tok or 'end of input'!r}", pos)


# --- Evaluation ---

Lookup = Callable[[str], Value]


def eval_expr(ast: ExprAst, lookup: Lookup) -> Value:
    """Evaluate against a name->Value lookup.

    The lookup receives the identifier's canonical text (index folded in,
    e.g. ``data[0]``) and must return a Value or raise KeyError.
    """
    if isinstance(ast, Lit):
        return Value(ast.width, ast.value)
    if isinstance(ast, Ident):
        try:
            return lookup(ast.key)
        except KeyError:
            raise EvalError(f"unresolved identifier {ast.key!r}") from None
    if isinstance(ast, Unary):
        v = eval_expr(ast.operand, lookup)
        if not v.known:
            return unknown(v.width if ast.op != "!" else 1)
        mask = (1 << v.width) - 1
        if ast.op == "~":
            return Value(v.width, ~v.bits & mask)
        if ast.op == "-":
            return Value(v.width, -v.bits & mask)
        if ast.op == "!":
            return Value(1, 0 if v.bits else 1)
        raise EvalError(f"unknown unary operator {ast.op!r}")
    if isinstance(ast, Binary):
        a = eval_expr(ast.left, lookup)
        b = eval_expr(ast.right, lookup)
        return _apply_binary(ast.op, a, b)
    if isinstance(ast, Ternary):
        # Strict evaluation: all three arms are computed and unknowns poison
        # the result regardless of which branch would be taken.
        c = eval_expr(ast.cond, lookup)
        t = eval_expr(ast.then, lookup)
        o = eval_expr(ast.other, lookup)
        width = max(t.width, o.width)
        if not (c.known and t.known and o.known):
            return unknown(width)
        picked = t if c.bits else o
        return Value(width, picked.bits)
    raise EvalError(f"not an expression node: {ast!r}")


def _apply_binary(op: str, a: Value, b: Value) -> Value:
    logical = op in ("==", "!=", "<", "<=", ">", ">=", "&&", "||")
    width = 1 if logical else (a.width if op in ("<<", ">>") else max(a.width, b.width))
    if not (a.known and b.known):
        return unknown(width)
    x, y = a.bits, b.bits
    if op in ("/", "%") and y == 0:
        return unknown(width)
    if logical:
        if op == "==":
            return V_TRUE if x == y else V_FALSE
        if op == "!=":
            return V_TRUE if x != y else V_FALSE
        if op == "<":
            return V_TRUE if x < y else V_FALSE
        if op == "<=":
            return V_TRUE if x <= y else V_FALSE
        if op == ">":
            return V_TRUE if x > y else V_FALSE
        if op == ">=":
            return V_TRUE if x >= y else V_FALSE
        if op == "&&":
            return V_TRUE if (x and y) else V_FALSE
        return V_TRUE if (x or y) else V_FALSE  # ||
    mask = (1 << width) - 1
    if op == "+":
        return Value(width, (x + y) & mask)
    if op == "-":
        return Value(width, (x - y) & mask)
    if op == "*":
        return Value(width, (x * y) & mask)
    if op == "/":
        return Value(width, (x // y) & mask)
    if op == "%":
        return Value(width, (x % y) & mask)
    if op == "&":
        return Value(width, x & y)
    if op == "|":
        return Value(width, x | y)
    if op == "^":
        return Value(width, x ^ y)
    if op == "<<":
        return Value(width, (x << y) & mask if y < width else 0)
    if op == ">>":
        return Value(width, x >> y)
    raise EvalError(f"unknown binary operator {op!r}")


def compile_expr(ast: ExprAst) -> Callable[[Lookup], Value]:
    """Compile to nested closures; semantics identical to eval_expr.

    Worth it for expressions evaluated once per clock edge (breakpoint
    enables and user conditions): no per-evaluation AST dispatch, and
    literal Values are materialized once.
    """
    if isinstance(ast, Lit):
        v = Value(ast.width, ast.value)
        return lambda lookup: v
    if isinstance(ast, Ident):
        key = ast.key

        def run_ident(lookup: Lookup) -> Value:
            try:
                return lookup(key)
            except KeyError:
                raise EvalError(f"unresolved identifier {key!r}") from None

        return run_ident
    if isinstance(ast, Unary):
        op = ast.op
        operand = compile_expr(ast.operand)

        def run_unary(lookup: Lookup) -> Value:
            v = operand(lookup)
            if not v.known:
                return unknown(v.width if op != "!" else 1)
            if op == "~":
                return Value(v.width, ~v.bits & ((1 << v.width) - 1))
            if op == "-":
                return Value(v.width, -v.bits & ((1 << v.width) - 1))
            return V_FALSE if v.bits else V_TRUE  # !

        return run_unary
    if isinstance(ast, Binary):
        op = ast.op
        left = compile_expr(ast.left)
        right = compile_expr(ast.right)
        return lambda lookup: _apply_binary(op, left(lookup), right(lookup))
    if isinstance(ast, Ternary):
        cond = compile_expr(ast.cond)
        then = compile_expr(ast.then)
        other = compile_expr(ast.other)

        def run_ternary(lookup: Lookup) -> Value:
            c = cond(lookup)
            t = then(lookup)
            o = other(lookup)
            width = max(t.width, o.width)
            if not (c.known and t.known and o.known):
                return unknown(width)
            picked = t if c.bits else o
            return picked if picked.width == width else Value(width, picked.bits)

        return run_ternary
    raise EvalError(f"not an expression node: {ast!r}")


# --- Printing ---

_LEVEL_OF = {op: i for i, level in enumerate(_BINARY_LEVELS) for op in level}


def to_text(ast: ExprAst) -> str:
    """Render an AST back to source text. Parses back to an equal AST."""
    return _render(ast, -1)


def _render(ast: ExprAst, outer: int) -> str:
    if isinstance(ast, Lit):
        if ast.width != max(1, ast.value.bit_length()):
            return f"{ast.width}'d{ast.value}"
        return str(ast.value)
    if isinstance(ast, Ident):
        return ast.key
    if isinstance(ast, Unary):
        return f"{ast.op}{_render(ast.operand, len(_BINARY_LEVELS))}"
    if isinstance(ast, Binary):
        level = _LEVEL_OF[ast.op]
        text = f"{_render(ast.left, level - 1)} {ast.op} {_render(ast.right, level)}"
        return f"({text})" if level <= outer else text
    if isinstance(ast, Ternary):
        text = f"{_render(ast.cond, 0)} ? {_render(ast.then, -1)} : {_render(ast.other, -1)}"
        return f"({text})"
    raise TypeError(f"not an expression node: {ast!r}")


def identifiers(ast: ExprAst) -> set[str]:
    """All identifier keys referenced by the expression."""
    out: set[str] = set()
    _collect_idents(ast, out)
    return out


def _collect_idents(ast: ExprAst, out: set[str]):
    if isinstance(ast, Ident):
        out.add(ast.key)
    elif isinstance(ast, Unary):
        _collect_idents(ast.operand, out)
    elif isinstance(ast, Binary):
        _collect_idents(ast.left, out)
        _collect_idents(ast.right, out)
    elif isinstance(ast, Ternary):
        _collect_idents(ast.cond, out)
        _collect_idents(ast.then, out)
        _collect_idents(ast.other, out)
