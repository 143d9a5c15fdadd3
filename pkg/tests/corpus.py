"""Seeded random mini-HDL programs and stimulus for property testing.

Programs stay within the corpus envelope: at most 3 nesting levels, loops of
at most 4 iterations, at most 6 combinational locals. Roughly a third of the
programs wrap the generated module in a top that instantiates it twice, so
multi-instance (hardware thread) behavior is exercised throughout.
"""

from __future__ import annotations

import random

from hgdbg.frontend import parse
from hgdbg.frontend.validate import validate

MAX_DEPTH = 3
MAX_LOOP = 4
MAX_VARS = 6

_CMP_OPS = ["==", "!=", "<", "<=", ">", ">="]
_ARITH_OPS = ["+", "-", "*", "&", "|", "^"]


class _Gen:
    def __init__(self, rng: random.Random):
        self.rng = rng
        self.widths: dict[str, int] = {}
        self.inputs: list[str] = []
        self.array: tuple[str, int, int] | None = None  # (name, width, size)
        self.regs: list[str] = []
        self.locals: list[str] = []
        self.outs: list[str] = []
        self.lines: list[str] = []
        self.depth_budget = MAX_DEPTH

    def emit(self, indent: int, text: str):
        self.lines.append("  " * indent + text)

    # --- expressions ---

    def leaf(self, readable: list[str], loops: list[str]) -> str:
        rng = self.rng
        choices = ["lit"] + ["name"] * (3 if readable else 0) + (["loop"] * 2 if loops else [])
        if self.array is not None:
            choices += ["elem"] * 2
        kind = rng.choice(choices)
        if kind == "name":
            return rng.choice(readable)
        if kind == "loop":
            return rng.choice(loops)
        if kind == "elem":
            name, _w, size = self.array
            if loops and rng.random() < 0.7:
                return f"{name}[{rng.choice(loops)} % {size}]"
            return f"{name}[{rng.randrange(size)}]"
        return str(rng.randrange(0, 16))

    def expr(self, readable: list[str], loops: list[str], depth: int = 0) -> str:
        rng = self.rng
        if depth >= 3 or rng.random() < 0.35:
            return self.leaf(readable, loops)
        kind = rng.random()
        a = self.expr(readable, loops, depth + 1)
        if kind < 0.08:
            return f"{rng.choice(['~', '!', '-'])}{_parens(a)}"
        b = self.expr(readable, loops, depth + 1)
        if kind < 0.16:
            return f"{_parens(a)} {rng.choice(_CMP_OPS)} {_parens(b)}"
        if kind < 0.22:
            return f"{_parens(a)} {rng.choice(['&&', '||'])} {_parens(b)}"
        if kind < 0.30:
            return f"{_parens(a)} % {rng.randrange(2, 8)}"
        if kind < 0.34:
            return f"{_parens(a)} / {rng.randrange(1, 8)}"
        if kind < 0.40:
            return f"{_parens(a)} {rng.choice(['<<', '>>'])} {rng.randrange(0, 4)}"
        if kind < 0.48:
            c = self.expr(readable, loops, depth + 1)
            return f"{_parens(a)} ? {_parens(b)} : {_parens(c)}"
        return f"{_parens(a)} {rng.choice(_ARITH_OPS)} {_parens(b)}"

    # --- statements ---

    def readable_names(self, defined: list[str]) -> list[str]:
        return self.inputs + self.regs + defined

    def statements(self, indent: int, defined: list[str], loops: list[str],
                   conditional: bool, depth: int):
        rng = self.rng
        for _ in range(rng.randrange(1, 4)):
            roll = rng.random()
            can_nest = depth < MAX_DEPTH
            if roll < 0.25 and can_nest:
                cond = self.expr(self.readable_names(defined), loops)
                self.emit(indent, f"if {cond} {{")
                self.statements(indent + 1, defined, loops, True, depth + 1)
                if rng.random() < 0.5:
                    self.emit(indent, "} else {")
                    self.statements(indent + 1, defined, loops, True, depth + 1)
                self.emit(indent, "}")
            elif roll < 0.45 and can_nest and len(loops) < 3:
                var = "ijk"[len(loops)]
                stop = rng.randrange(1, MAX_LOOP + 1)
                self.emit(indent, f"for {var} in 0..{stop} {{")
                self.statements(indent + 1, defined, loops + [var], conditional, depth + 1)
                self.emit(indent, "}")
            else:
                fresh = (
                    not conditional
                    and len(self.locals) < MAX_VARS
                    and (not defined or rng.random() < 0.4)
                )
                if fresh:
                    target = f"v{len(self.locals)}"
                    self.locals.append(target)
                    self.widths[target] = 8
                elif defined:
                    target = rng.choice(defined)
                else:
                    continue
                value = self.expr(self.readable_names(defined), loops)
                self.emit(indent, f"{target} = {value};")
                if target not in defined and not conditional:
                    defined.append(target)

    # --- program assembly ---

    def module_text(self, two_instances: bool) -> str:
        rng = self.rng
        n_inputs = rng.randrange(1, 3)
        for k in range(n_inputs):
            name = f"in{k}"
            self.inputs.append(name)
            self.widths[name] = rng.choice([1, 4, 8])
        if rng.random() < 0.6:
            self.array = ("data", rng.choice([4, 8]), rng.randrange(2, 4))
        n_regs = rng.randrange(1, 3)  # always clocked: sim backends need a clock
        for k in range(n_regs):
            name = f"r{k}"
            self.regs.append(name)
            self.widths[name] = rng.choice([4, 8])
        n_outs = rng.randrange(1, 3)
        self.outs = [f"out{k}" for k in range(n_outs)]

        self.emit(0, "module worker {")
        self.emit(1, "in clk: 1;")
        self.emit(1, "in rst: 1;")
        for name in self.inputs:
            self.emit(1, f"in {name}: {self.widths[name]};")
        if self.array is not None:
            name, width, size = self.array
            self.emit(1, f"in {name}[{size}]: {width};")
        for name in self.outs:
            self.emit(1, f"out {name}: 8;")
        for name in self.regs:
            reset = f" = {self.rng.randrange(0, 16)}" if rng.random() < 0.7 else ""
            self.emit(1, f"reg {name}: {self.widths[name]} @clk{reset};")

        self.emit(1, "comb {")
        defined: list[str] = []
        self.statements(2, defined, [], False, 1)
        for out in self.outs:
            self.emit(2, f"{out} = {self.expr(self.readable_names(defined), [])};")
        self.emit(1, "}")

        if self.regs:
            self.emit(1, "seq (clk) {")
            comb_reads = self.inputs + self.regs + defined
            for reg in self.regs:
                if rng.random() < 0.5:
                    cond = self.expr(comb_reads, [])
                    self.emit(2, f"if {cond} {{")
                    self.emit(3, f"{reg} = {self.expr(comb_reads, [])};")
                    self.emit(2, "}")
                else:
                    self.emit(2, f"{reg} = {self.expr(comb_reads, [])};")
            self.emit(1, "}")
        self.emit(0, "}")

        if two_instances:
            self.emit(0, "module top {")
            self.emit(1, "in clk: 1;")
            self.emit(1, "in rst: 1;")
            for name in self.inputs:
                self.emit(1, f"in {name}: {self.widths[name]};")
            if self.array is not None:
                name, width, size = self.array
                self.emit(1, f"in {name}[{size}]: {width};")
            bindings = ["clk = clk", "rst = rst"]
            bindings += [f"{n} = {n}" for n in self.inputs]
            if self.array is not None:
                bindings.append(f"{self.array[0]} = {self.array[0]}")
            for k in range(2):
                for out in self.outs:
                    self.emit(1, f"out {out}_{k}: 8;")
            for k in range(2):
                outs = ", ".join(f"{out} = {out}_{k}" for out in self.outs)
                self.emit(1, f"inst w{k}: worker({', '.join(bindings)}, {outs});")
            self.emit(0, "}")
        return "\n".join(self.lines) + "\n"


def _parens(text: str) -> str:
    return text if text.isidentifier() or text.isdigit() or "[" in text and " " not in text else f"({text})"


def random_source(rng: random.Random) -> str:
    return _Gen(rng).module_text(two_instances=rng.random() < 0.35)


def random_program(rng: random.Random, file: str = "gen.mh"):
    for _ in range(50):
        text = random_source(rng)
        try:
            return parse(text, file)
        except Exception:
            continue
    raise AssertionError("generator failed to produce a valid program 50 times in a row")


def random_stimulus(rng: random.Random, program, cycles: int) -> list[dict]:
    info = validate(program)[program.top]
    out = []
    for _ in range(cycles):
        cycle: dict = {}
        for port in program.module(program.top).in_ports:
            if port.name in info.clock_ports:
                continue
            if port.name == "rst":
                cycle["rst"] = 1 if rng.random() < 0.1 else 0
            elif port.size is not None:
                cycle[port.name] = [rng.randrange(1 << port.width) for _ in range(port.size)]
            else:
                cycle[port.name] = rng.randrange(1 << port.width)
        out.append(cycle)
    return out
