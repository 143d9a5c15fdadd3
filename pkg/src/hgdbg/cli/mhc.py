"""mhc: the mini-HDL compiler driver.

Compiles a source file to any combination of artifacts: textual netlist
(--emit netlist), symbol table (--emit symtab, SQLite; --emit symtab-json
for the JSON export), and a VCD trace simulated from a stimulus file
(--emit vcd --stimulus FILE [--cycles N]).

Exit codes: 0 ok, 1 user error (bad flags, compile errors, bad stimulus),
2 internal error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..frontend import MiniHdlError, parse
from ..lowering import compile_program, emit_verilog_like
from ..simbackends import CycleSim, SimError
from .. import symtab
from .stimulus import StimulusError, default_cycle_count, load_stimulus, parse_stimulus

EMIT_CHOICES = ("netlist", "symtab", "symtab-json", "vcd")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mhc",
        description="Compile mini-HDL to a flat netlist, symbol table, and optional VCD.",
    )
    parser.add_argument("input", help="mini-HDL source file (.mh)")
    parser.add_argument("-o", "--out-dir", default=".", help="output directory")
    parser.add_argument("--top", help="top module (default: last module in the file)")
    level = parser.add_mutually_exclusive_group()
    level.add_argument("--debug", dest="level", action="store_const", const="debug",
                       help="no optimization; keep every net (default)")
    level.add_argument("--optimized", dest="level", action="store_const", const="optimized",
                       help="constant folding/propagation and dead-net elimination")
    parser.set_defaults(level="debug")
    parser.add_argument("--emit", action="append", choices=EMIT_CHOICES, default=[],
                        help="artifact to produce (repeatable)")
    parser.add_argument("--stimulus", help="stimulus file for --emit vcd")
    parser.add_argument("--cycles", type=int, help="cycles to simulate for --emit vcd")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _run(args)
    except (MiniHdlError, StimulusError, SimError, symtab.SymbolTableError) as e:
        print(f"mhc: error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"mhc: error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # internal
        print(f"mhc: internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return 2


def _run(args) -> int:
    emits = args.emit or ["netlist", "symtab"]
    if "vcd" in emits and not args.stimulus:
        print("mhc: error: --emit vcd requires --stimulus", file=sys.stderr)
        return 1

    source_path = Path(args.input)
    source = source_path.read_text(encoding="utf-8")
    program = parse(source, source_path.as_posix(), top=args.top)
    netlist, _annotations, table = compile_program(program, args.level)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    top = program.top

    if "netlist" in emits:
        path = out_dir / f"{top}.v"
        path.write_text(emit_verilog_like(netlist), encoding="utf-8")
        print(f"wrote {path}")
    if "symtab" in emits:
        path = out_dir / f"{top}{symtab.FILE_SUFFIX}"
        symtab.store(table, path)
        print(f"wrote {path}")
    if "symtab-json" in emits:
        path = out_dir / f"{top}.symtab.json"
        symtab.save_json(table, path)
        print(f"wrote {path}")
    if "vcd" in emits:
        with open(args.stimulus, encoding="utf-8") as f:
            sparse = parse_stimulus(f.read())
        cycles = args.cycles if args.cycles is not None else default_cycle_count(sparse)
        stimulus = load_stimulus(args.stimulus, program, cycles)
        path = out_dir / f"{top}.vcd"
        sim = CycleSim(netlist, stimulus)
        sim.dump_vcd(str(path))
        sim.run()
        sim.close()
        print(f"wrote {path} ({cycles} cycles)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
