"""VCD subset: parsing into a TraceStore, and a deterministic writer.

Supported grammar (see docs/vcd.md): $timescale, $scope module, $var with
types wire/reg, $upscope, $enddefinitions, `#t` timestamps, scalar changes
(`0!`, `1!`, `x!`, `z!`) and vector changes (`b1010 !`). $date, $version,
$comment and $dumpvars sections are tolerated and skipped. Any x or z bit
makes the whole value unknown.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from typing import IO, Iterable, Optional, Union

from ..expr import Value
from .base import HierarchyNode


class VcdError(Exception):
    pass


@dataclass
class SignalTrace:
    name: str  # hierarchical, dot separated
    width: int
    changes_t: list[int] = field(default_factory=list)
    changes_v: list[Value] = field(default_factory=list)

    def value_at(self, time: int) -> Value:
        """Most recent change at-or-before `time`; unknown before the first."""
        i = bisect.bisect_right(self.changes_t, time)
        if i == 0:
            return Value.unknown(self.width)
        return self.changes_v[i - 1]


@dataclass
class TraceStore:
    timescale: str = "1 ns"
    signals: dict[str, SignalTrace] = field(default_factory=dict)
    hierarchy: Optional[HierarchyNode] = None
    # All changes in file order: (time, signal name, value).
    stream: list[tuple[int, str, Value]] = field(default_factory=list)
    end_time: int = 0

    def add_change(self, time: int, name: str, value: Value):
        sig = self.signals[name]
        if sig.changes_t and time < sig.changes_t[-1]:
            raise VcdError(f"non-monotonic change for {name} at #{time}")
        if sig.changes_t and sig.changes_t[-1] == time:
            sig.changes_v[-1] = value
            for i in range(len(self.stream) - 1, -1, -1):
                if self.stream[i][0] != time:
                    break
                if self.stream[i][1] == name:
                    self.stream[i] = (time, name, value)
                    break
        else:
            sig.changes_t.append(time)
            sig.changes_v.append(value)
            self.stream.append((time, name, value))
        self.end_time = max(self.end_time, time)


def _parse_vector(text: str, width: int, what: str) -> Value:
    if len(text) > width:
        raise VcdError(f"width overflow: {what} declares {width} bits, change has {len(text)}")
    if any(c in "xXzZ" for c in text):
        return Value.unknown(width)
    try:
        return Value(width, int(text, 2))
    except ValueError:
        raise VcdError(f"malformed vector value {text!r} for {what}") from None


def parse_vcd(source: Union[str, IO[str]]) -> TraceStore:
    """Parse a VCD file (path or text stream) into a TraceStore."""
    if isinstance(source, str):
        with open(source, "r", encoding="utf-8", errors="replace") as f:
            return _parse(f)
    return _parse(source)


def _parse(f: IO[str]) -> TraceStore:
    store = TraceStore()
    root = HierarchyNode("$root")
    scope_stack = [root]
    by_id: dict[str, SignalTrace] = {}
    in_definitions = True
    time = 0
    saw_time = False

    tokens = _tokens(f)
    for tok in tokens:
        if tok.startswith("$"):
            kw = tok
            if kw in ("$date", "$version", "$comment", "$timescale"):
                body = []
                for t in tokens:
                    if t == "$end":
                        break
                    body.append(t)
                if kw == "$timescale":
                    store.timescale = " ".join(body)
                continue
            if kw == "$scope":
                if not in_definitions:
                    raise VcdError("$scope after $enddefinitions")
                _parse_scope(tokens, scope_stack)
                continue
            if kw == "$enddefinitions":
                _expect_end(tokens)
                in_definitions = False
                continue
            if kw == "$dumpvars" or kw == "$dumpall" or kw == "$dumpon" or kw == "$dumpoff":
                continue  # changes inside are handled by the normal cases
            if kw == "$end":
                continue
            if kw == "$upscope":
                if len(scope_stack) == 1:
                    raise VcdError("$upscope without matching $scope")
                scope_stack.pop()
                _expect_end(tokens)
                continue
            if kw == "$var":
                if not in_definitions:
                    raise VcdError("$var after $enddefinitions")
                var_type = next(tokens, None)
                width_text = next(tokens, None)
                ident = next(tokens, None)
                name = next(tokens, None)
                if None in (var_type, width_text, ident, name):
                    raise VcdError("truncated $var declaration")
                if var_type not in ("wire", "reg"):
                    raise VcdError(f"unsupported $var type {var_type!r}")
                rest = []
                for t in tokens:
                    if t == "$end":
                        break
                    rest.append(t)  # e.g. a trailing [7:0] reference
                try:
                    width = int(width_text)
                except ValueError:
                    raise VcdError(f"malformed $var width {width_text!r}") from None
                if width < 1:
                    raise VcdError(f"bad $var width {width}")
                scope = scope_stack[-1]
                path_parts = [n.name for n in scope_stack[1:]] + [name]
                full = ".".join(path_parts)
                if ident in by_id:
                    # Aliased identifier: same storage under another name.
                    sig = by_id[ident]
                else:
                    sig = SignalTrace(full, width)
                    by_id[ident] = sig
                if full not in store.signals:
                    store.signals[full] = sig
                    scope.signals.append((name, width))
                continue
            raise VcdError(f"unsupported VCD construct {kw!r}")
        if tok.startswith("#"):
            try:
                new_time = int(tok[1:])
            except ValueError:
                raise VcdError(f"malformed timestamp {tok!r}") from None
            if saw_time and new_time < time:
                raise VcdError(f"timestamps must be nondecreasing (#{new_time} after #{time})")
            time = new_time
            saw_time = True
            continue
        # Value change.
        if in_definitions:
            raise VcdError(f"value change {tok!r} before $enddefinitions")
        if tok[0] in "01xXzZ":
            ident = tok[1:]
            sig = by_id.get(ident)
            if sig is None:
                raise VcdError(f"change for undeclared identifier {ident!r}")
            ch = tok[0].lower()
            value = Value.unknown(sig.width) if ch in "xz" else Value(sig.width, int(ch))
            store.add_change(time, sig.name, value)
            continue
        if tok[0] in "bB":
            ident = next(tokens, None)
            if ident is None:
                raise VcdError("vector change missing identifier")
            sig = by_id.get(ident)
            if sig is None:
                raise VcdError(f"change for undeclared identifier {ident!r}")
            store.add_change(time, sig.name, _parse_vector(tok[1:], sig.width, sig.name))
            continue
        raise VcdError(f"unexpected token {tok!r}")

    if in_definitions:
        raise VcdError("malformed header: missing $enddefinitions")
    # Collapse the artificial root when the file has a single top scope.
    if len(root.children) == 1 and not root.signals:
        store.hierarchy = root.children[0]
    else:
        store.hierarchy = root
    return store


def _expect_end(tokens):
    for t in tokens:
        if t == "$end":
            return
        raise VcdError(f"expected $end, found {t!r}")
    raise VcdError("expected $end, found end of file")


def _tokens(f: IO[str]):
    for line in f:
        yield from line.split()


def _parse_scope(tokens, scope_stack):
    scope_type = next(tokens, None)
    name = next(tokens, None)
    if scope_type is None or name is None:
        raise VcdError("truncated $scope declaration")
    if scope_type != "module":
        raise VcdError(f"unsupported scope type {scope_type!r}")
    node = HierarchyNode(name)
    scope_stack[-1].children.append(node)
    scope_stack.append(node)
    _expect_end(tokens)


class VcdWriter:
    """Streams a deterministic VCD: fixed header, stable identifier codes."""

    def __init__(self, f: IO[str], timescale: str = "1 ns"):
        self.f = f
        self.timescale = timescale
        self._ids: dict[str, str] = {}
        self._time: Optional[int] = None
        self._header_done = False

    def _code(self, index: int) -> str:
        # Printable identifier codes ! .. ~, multi-character as needed.
        chars = []
        index += 1
        while index:
            index, rem = divmod(index - 1, 94)
            chars.append(chr(33 + rem))
        return "".join(reversed(chars))

    def write_header(self, hierarchy: HierarchyNode, widths: dict[str, int]):
        """`widths` maps full dotted signal paths to bit widths."""
        w = self.f.write
        w(f"$timescale {self.timescale} $end\n")

        def scope(node: HierarchyNode, prefix: str):
            path = f"{prefix}.{node.name}" if prefix else node.name
            w(f"$scope module {node.name} $end\n")
            for leaf, width in node.signals:
                full = f"{path}.{leaf}"
                code = self._code(len(self._ids))
                self._ids[full] = code
                w(f"$var wire {width} {code} {leaf} $end\n")
            for child in node.children:
                scope(child, path)
            w("$upscope $end\n")

        scope(hierarchy, "")
        w("$enddefinitions $end\n")
        self._header_done = True

    def change(self, time: int, name: str, value: Value):
        if not self._header_done:
            raise VcdError("change before header")
        if self._time != time:
            self.f.write(f"#{time}\n")
            self._time = time
        code = self._ids[name]
        if not value.known:
            text = "x" if value.width == 1 else "b" + "x" * value.width
        elif value.width == 1:
            text = str(value.bits)
        else:
            text = "b" + format(value.bits, "b")
        if value.width == 1 and not text.startswith("b"):
            self.f.write(f"{text}{code}\n")
        else:
            self.f.write(f"{text} {code}\n")
