"""Lexer and recursive-descent parser for mini-HDL.

The grammar is brace-delimited with `;` statement terminators (see
docs/grammar.md), so token columns are meaningful: breakpoints on a line
holding several statements are disambiguated by column.
"""

from __future__ import annotations

from typing import Optional

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
    ParseError,
    Port,
    Ref,
    RegDecl,
    SeqBlock,
    SourceLoc,
    SourceProgram,
    SrcExpr,
    Stmt,
    UnaryOp,
)
from .validate import validate

_KEYWORDS = {"module", "in", "out", "reg", "inst", "comb", "seq", "if", "else", "for"}

# Longest-match punctuation; `..` must come before `.`.
_PUNCT = [
    "<<", ">>", "==", "!=", "<=", ">=", "&&", "||", "..",
    "{", "}", "(", ")", "[", "]", ";", ",", ":", "@", "=",
    "+", "-", "*", "/", "%", "&", "|", "^", "~", "!", "<", ">", "?", ".",
]

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


class _Token:
    __slots__ = ("kind", "text", "loc")

    def __init__(self, kind: str, text: str, loc: SourceLoc):
        self.kind = kind  # name | num | punct | kw | eof
        self.text = text
        self.loc = loc

    def __repr__(self):
        return f"Token({self.kind}, {self.text!r}, {self.loc})"


def _lex(source: str, file: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col, i, n = 1, 1, 0, len(source)

    def loc():
        return SourceLoc(file, line, col)

    while i < n:
        ch = source[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            col += 1
            i += 1
            continue
        if source.startswith("//", i):
            while i < n and source[i] != "\n":
                i += 1
            continue
        if ch.isdigit():
            start, start_loc = i, loc()
            if source.startswith(("0x", "0X"), i):
                i += 2
                while i < n and (source[i].isdigit() or source[i] in "abcdefABCDEF"):
                    i += 1
                if i == start + 2:
                    raise ParseError("malformed hex literal", start_loc)
            else:
                while i < n and source[i].isdigit():
                    i += 1
            tokens.append(_Token("num", source[start:i], start_loc))
            col += i - start
            continue
        if ch.isalpha() or ch == "_":
            start, start_loc = i, loc()
            while i < n and (source[i].isalnum() or source[i] == "_"):
                i += 1
            text = source[start:i]
            tokens.append(_Token("kw" if text in _KEYWORDS else "name", text, start_loc))
            col += i - start
            continue
        for punct in _PUNCT:
            if source.startswith(punct, i):
                tokens.append(_Token("punct", punct, loc()))
                i += len(punct)
                col += len(punct)
                break
        else:
            raise ParseError(f"unexpected character {ch!r}", loc())
    tokens.append(_Token("eof", "", SourceLoc(file, line, col)))
    return tokens


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.i = 0
        self.next_sid = 0

    def peek(self, ahead: int = 0) -> _Token:
        return self.tokens[min(self.i + ahead, len(self.tokens) - 1)]

    def advance(self) -> _Token:
        tok = self.tokens[self.i]
        if tok.kind != "eof":
            self.i += 1
        return tok

    def at(self, text: str) -> bool:
        tok = self.peek()
        return tok.kind in ("punct", "kw") and tok.text == text

    def accept(self, text: str) -> Optional[_Token]:
        if self.at(text):
            return self.advance()
        return None

    def expect(self, text: str) -> _Token:
        if not self.at(text):
            tok = self.peek()
            found = tok.text or "end of input"
            raise ParseError(f"expected {text!r}, found {found!r}", tok.loc)
        return self.advance()

    def expect_name(self, what: str = "name") -> _Token:
        tok = self.peek()
        if tok.kind != "name":
            raise ParseError(f"expected {what}, found {tok.text or 'end of input'!r}", tok.loc)
        return self.advance()

    def expect_num(self) -> tuple[int, SourceLoc]:
        tok = self.peek()
        if tok.kind != "num":
            raise ParseError(f"expected integer, found {tok.text or 'end of input'!r}", tok.loc)
        self.advance()
        return int(tok.text, 0), tok.loc

    def sid(self) -> int:
        self.next_sid += 1
        return self.next_sid - 1

    # --- Grammar ---

    def program(self, file: str, top: Optional[str]) -> SourceProgram:
        modules = []
        while not self.at_eof():
            modules.append(self.module())
        if not modules:
            raise ParseError("empty source: no modules", self.peek().loc)
        names = [m.name for m in modules]
        if top is None:
            top = names[-1]  # last module is the implicit top
        elif top not in names:
            raise ParseError(f"requested top module {top!r} not defined", modules[0].loc)
        return SourceProgram(modules, top, file)

    def at_eof(self) -> bool:
        return self.peek().kind == "eof"

    def module(self) -> ModuleDef:
        kw = self.expect("module")
        name = self.expect_name("module name").text
        self.expect("{")
        ports: list[Port] = []
        regs: list[RegDecl] = []
        insts: list[Instance] = []
        combs: list[CombBlock] = []
        seqs: list[SeqBlock] = []
        while not self.accept("}"):
            tok = self.peek()
            if tok.text in ("in", "out"):
                ports.append(self.port_decl())
            elif tok.text == "reg":
                regs.append(self.reg_decl())
            elif tok.text == "inst":
                insts.append(self.inst_decl())
            elif tok.text == "comb":
                loc = self.advance().loc
                combs.append(CombBlock(self.braced_stmts(), loc))
            elif tok.text == "seq":
                loc = self.advance().loc
                self.expect("(")
                clock = self.dotted_name()
                self.expect(")")
                seqs.append(SeqBlock(clock, self.braced_stmts(), loc))
            else:
                raise ParseError(
                    f"expected a declaration or block, found {tok.text or 'end of input'!r}",
                    tok.loc,
                )
        return ModuleDef(name, ports, regs, insts, combs, seqs, kw.loc)

    def dotted_name(self) -> str:
        parts = [self.expect_name().text]
        while self.peek().text == "." and self.peek(1).kind == "name":
            self.advance()
            parts.append(self.expect_name().text)
        return ".".join(parts)

    def port_decl(self) -> Port:
        tok = self.advance()  # in | out
        name = self.dotted_name()
        size = None
        if self.accept("["):
            size, _ = self.expect_num()
            self.expect("]")
        self.expect(":")
        width, wloc = self.expect_num()
        if width < 1:
            raise ParseError("port width must be >= 1", wloc)
        if size is not None and size < 1:
            raise ParseError("array size must be >= 1", tok.loc)
        self.expect(";")
        return Port(name, tok.text, width, size, tok.loc)

    def reg_decl(self) -> RegDecl:
        kw = self.advance()
        name = self.expect_name("register name").text
        self.expect(":")
        width, wloc = self.expect_num()
        if width < 1:
            raise ParseError("register width must be >= 1", wloc)
        self.expect("@")
        clock = self.dotted_name()
        reset = None
        if self.accept("="):
            reset, rloc = self.expect_num()
            if reset >= (1 << width):
                raise ParseError(f"reset value {reset} does not fit in {width} bits", rloc)
        self.expect(";")
        return RegDecl(name, width, clock, reset, kw.loc)

    def inst_decl(self) -> Instance:
        kw = self.advance()
        name = self.expect_name("instance name").text
        self.expect(":")
        module = self.expect_name("module name").text
        self.expect("(")
        bindings = []
        if not self.at(")"):
            while True:
                port_tok = self.peek()
                port = self.dotted_name()
                self.expect("=")
                bindings.append(Binding(port, self.expression(), port_tok.loc))
                if not self.accept(","):
                    break
        self.expect(")")
        self.expect(";")
        return Instance(name, module, bindings, kw.loc)

    def braced_stmts(self) -> list[Stmt]:
        self.expect("{")
        stmts = []
        while not self.accept("}"):
            stmts.append(self.statement())
        return stmts

    def statement(self) -> Stmt:
        tok = self.peek()
        if tok.text == "if":
            return self.if_stmt()
        if tok.text == "for":
            return self.for_stmt()
        if tok.text == "{":
            loc = tok.loc
            return Block(self.braced_stmts(), loc, self.sid())
        if tok.kind != "name":
            raise ParseError(f"expected a statement, found {tok.text or 'end of input'!r}", tok.loc)
        target = self.dotted_name()
        self.expect("=")
        value = self.expression()
        self.expect(";")
        return Assign(target, value, tok.loc, self.sid())

    def if_stmt(self) -> If:
        kw = self.advance()
        cond = self.expression()
        then = self.braced_stmts()
        orelse: list[Stmt] = []
        if self.accept("else"):
            if self.at("if"):
                orelse = [self.if_stmt()]
            else:
                orelse = self.braced_stmts()
        return If(cond, then, orelse, kw.loc, self.sid())

    def for_stmt(self) -> For:
        kw = self.advance()
        var = self.expect_name("loop variable").text
        self.expect("in")  # lexed as a keyword
        start = self.const_expr("loop bound")
        self.expect("..")
        stop = self.const_expr("loop bound")
        body = self.braced_stmts()
        return For(var, start, stop, body, kw.loc, self.sid())

    def const_expr(self, what: str) -> int:
        expr = self.expression()
        value = _fold_const(expr)
        if value is None:
            raise ParseError(f"non-constant {what}: bounds must be compile-time integers", expr.loc)
        return value

    # Expressions: precedence climbing over the source AST.

    def expression(self) -> SrcExpr:
        return self.ternary()

    def ternary(self) -> SrcExpr:
        cond = self.binary(0)
        if self.accept("?"):
            then = self.ternary()
            self.expect(":")
            other = self.ternary()
            return CondOp(cond, then, other, cond.loc)
        return cond

    def binary(self, level: int) -> SrcExpr:
        if level >= len(_BINARY_LEVELS):
            return self.unary()
        left = self.binary(level + 1)
        while self.peek().kind == "punct" and self.peek().text in _BINARY_LEVELS[level]:
            op = self.advance()
            right = self.binary(level + 1)
            left = BinOp(op.text, left, right, left.loc)
        return left

    def unary(self) -> SrcExpr:
        tok = self.peek()
        if tok.kind == "punct" and tok.text in ("~", "!", "-"):
            self.advance()
            return UnaryOp(tok.text, self.unary(), tok.loc)
        return self.primary()

    def primary(self) -> SrcExpr:
        tok = self.peek()
        if tok.kind == "num":
            self.advance()
            return Num(int(tok.text, 0), tok.loc)
        if tok.kind == "name":
            name = self.dotted_name()
            if self.accept("["):
                index = self.expression()
                self.expect("]")
                return IndexRef(name, index, tok.loc)
            return Ref(name, tok.loc)
        if self.accept("("):
            inner = self.expression()
            self.expect(")")
            return inner
        raise ParseError(f"expected an expression, found {tok.text or 'end of input'!r}", tok.loc)


def _fold_const(expr: SrcExpr) -> Optional[int]:
    """Fold a literal-only expression to an int; None if it names signals."""
    if isinstance(expr, Num):
        return expr.value
    if isinstance(expr, UnaryOp):
        v = _fold_const(expr.operand)
        if v is None:
            return None
        return {"~": lambda x: ~x, "-": lambda x: -x, "!": lambda x: int(not x)}[expr.op](v)
    if isinstance(expr, BinOp):
        a, b = _fold_const(expr.left), _fold_const(expr.right)
        if a is None or b is None:
            return None
        op = expr.op
        try:
            if op == "+":
                return a + b
            if op == "-":
                return a - b
            if op == "*":
                return a * b
            if op == "/":
                return a // b
            if op == "%":
                return a % b
            if op == "&":
                return a & b
            if op == "|":
                return a | b
            if op == "^":
                return a ^ b
            if op == "<<":
                return a << b if 0 <= b <= 64 else None
            if op == ">>":
                return a >> b if b >= 0 else None
            if op == "==":
                return int(a == b)
            if op == "!=":
                return int(a != b)
            if op == "<":
                return int(a < b)
            if op == "<=":
                return int(a <= b)
            if op == ">":
                return int(a > b)
            if op == ">=":
                return int(a >= b)
            if op == "&&":
                return int(bool(a) and bool(b))
            if op == "||":
                return int(bool(a) or bool(b))
        except ZeroDivisionError:
            return None
    return None


def parse(source_text: str, file: str, top: Optional[str] = None) -> SourceProgram:
    """Parse and validate mini-HDL source into a SourceProgram.

    The file path is normalized to forward slashes and recorded in every
    node's SourceLoc. Raises ParseError/SemanticError with locations.
    """
    file = file.replace("\\", "/")
    tokens = _lex(source_text, file)
    program = _Parser(tokens).program(file, top)
    validate(program)
    return program
