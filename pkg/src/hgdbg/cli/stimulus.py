"""Stimulus file loading: CSV-like `cycle,input=value,...` lines.

Within a cycle the last assignment wins; inputs not assigned in a cycle hold
their previous value (initially 0). Values are decimal or 0x hex; names are
source-level (array elements as `data[0]`). `#` starts a comment.
"""

from __future__ import annotations

from ..frontend.ast import SourceProgram
from ..frontend.validate import flatten_name, validate


class StimulusError(Exception):
    pass


def parse_stimulus(text: str) -> dict[int, dict[str, int]]:
    """Sparse {cycle: {source name: value}}, later lines overriding earlier."""
    sparse: dict[int, dict[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = [f.strip() for f in line.split(",")]
        try:
            cycle = int(fields[0])
        except ValueError:
            raise StimulusError(f"line {lineno}: expected a cycle number, got {fields[0]!r}")
        if cycle < 0:
            raise StimulusError(f"line {lineno}: cycle must be nonnegative")
        for assignment in fields[1:]:
            if not assignment:
                continue
            if "=" not in assignment:
                raise StimulusError(f"line {lineno}: expected name=value, got {assignment!r}")
            name, value_text = (part.strip() for part in assignment.split("=", 1))
            try:
                value = int(value_text, 0)
            except ValueError:
                raise StimulusError(f"line {lineno}: bad value {value_text!r} for {name!r}")
            sparse.setdefault(cycle, {})[name] = value
    return sparse


def expand_stimulus(sparse: dict[int, dict[str, int]], program: SourceProgram,
                    cycles: int) -> list[dict[str, int]]:
    """Dense per-cycle maps over flat net leaf names, with hold semantics."""
    info = validate(program)[program.top]
    top = program.module(program.top)
    valid: dict[str, int] = {}  # flat leaf -> width
    by_source: dict[str, str] = {}
    for port in top.in_ports:
        if port.name in info.clock_ports:
            continue
        if port.size is None:
            flat = flatten_name(port.name)
            valid[flat] = port.width
            by_source[port.name] = flat
        else:
            for i in range(port.size):
                flat = f"{flatten_name(port.name)}_{i}"
                valid[flat] = port.width
                by_source[f"{port.name}[{i}]"] = flat

    held = {flat: 0 for flat in valid}
    dense: list[dict[str, int]] = []
    for k in range(cycles):
        for name, value in sparse.get(k, {}).items():
            flat = by_source.get(name)
            if flat is None:
                raise StimulusError(f"cycle {k}: unknown input {name!r}")
            if not 0 <= value < (1 << valid[flat]):
                raise StimulusError(
                    f"cycle {k}: value {value} does not fit input {name!r} "
                    f"({valid[flat]} bits)"
                )
            held[flat] = value
        dense.append(dict(held))
    return dense


def load_stimulus(path: str, program: SourceProgram, cycles: int) -> list[dict[str, int]]:
    with open(path, encoding="utf-8") as f:
        sparse = parse_stimulus(f.read())
    return expand_stimulus(sparse, program, cycles)


def default_cycle_count(sparse: dict[int, dict[str, int]]) -> int:
    return (max(sparse) + 1) if sparse else 1
