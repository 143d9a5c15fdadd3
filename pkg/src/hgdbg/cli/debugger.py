"""hgdbg: gdb-style interactive debugger client over the wire protocol.

Modes:
  hgdbg --connect ws://host:port          attach to a running server
  hgdbg --vcd trace.vcd --symtab t.hgdb   self-host a replay backend
  hgdbg --run design.mh --stimulus s.csv  self-host a live cycle simulation
  hgdbg --bench [...]                     simulation-overhead microbenchmark

Commands: b <file>:<line>[:<col>] [if <expr>], d <id>, c, n, rc, rn,
p <expr>, info threads|breakpoints|time, set <name> <value>, time <t>, q.
--script FILE replays commands non-interactively and prints a transcript.
"""

from __future__ import annotations

import argparse
import sys
import time as _time

from ..client import ProtocolClient, ProtocolError
from ..frontend import MiniHdlError, parse
from ..lowering import compile_program
from ..runtime import DebuggerCore
from ..server import DebugServer
from ..simbackends import CycleSim, ReplayBackend, SimError, parse_vcd
from .. import symtab
from .bench import BenchError, run_bench
from .stimulus import StimulusError, default_cycle_count, load_stimulus, parse_stimulus


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hgdbg", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    mode = parser.add_argument_group("target")
    mode.add_argument("--connect", metavar="URL", help="ws://host:port of a running server")
    mode.add_argument("--vcd", metavar="TRACE", help="self-host: replay this VCD trace")
    mode.add_argument("--symtab", metavar="FILE", help="symbol table for --vcd")
    mode.add_argument("--clock", action="append", default=None,
                      metavar="NAME", help="explicit clock signal(s) for --vcd")
    mode.add_argument("--run", metavar="DESIGN", help="self-host: compile and simulate")
    mode.add_argument("--stimulus", metavar="FILE", help="stimulus for --run")
    mode.add_argument("--cycles", type=int, help="cycle count for --run")
    mode.add_argument("--top", help="top module for --run")
    level = mode.add_mutually_exclusive_group()
    level.add_argument("--debug", dest="level", action="store_const", const="debug")
    level.add_argument("--optimized", dest="level", action="store_const", const="optimized")
    parser.set_defaults(level="debug")
    parser.add_argument("--source-root", default=".", help="root for `info file` requests")
    parser.add_argument("--port", type=int, default=0,
                        help="self-host server port (0 = ephemeral)")
    parser.add_argument("--script", metavar="FILE", help="replay commands, print a transcript")

    bench = parser.add_argument_group("benchmark")
    bench.add_argument("--bench", action="store_true", help="measure simulation overhead")
    bench.add_argument("--edges", type=int, default=100_000)
    bench.add_argument("--signals", type=int, default=64)
    bench.add_argument("--breakpoints", type=int, default=16)
    bench.add_argument("--runs", type=int, default=5)
    bench.add_argument("--workload-vcd", metavar="PATH", help="replay this trace instead of a synthetic one")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.bench:
            run_bench(edges=args.edges, signals=args.signals,
                      breakpoints=args.breakpoints, runs=args.runs,
                      vcd_path=args.workload_vcd)
            return 0
        return _session(args)
    except BenchError as e:
        print(f"hgdbg: error: {e}", file=sys.stderr)
        return 1
    except (MiniHdlError, StimulusError, SimError, symtab.SymbolTableError, OSError) as e:
        print(f"hgdbg: error: {e}", file=sys.stderr)
        return 1
    except ConnectionError as e:
        print(f"hgdbg: connection refused: {e}", file=sys.stderr)
        return 1


def _self_host(args) -> DebugServer:
    if args.vcd:
        if not args.symtab:
            raise SimError("--vcd requires --symtab")
        table = symtab.load(args.symtab)
        backend = ReplayBackend(parse_vcd(args.vcd), clocks=args.clock)
        core = DebuggerCore(backend, table)
    else:
        source = open(args.run, encoding="utf-8").read()
        program = parse(source, args.run, top=args.top)
        netlist, _anns, table = compile_program(program, args.level)
        if args.stimulus:
            with open(args.stimulus, encoding="utf-8") as f:
                sparse = parse_stimulus(f.read())
            cycles = args.cycles if args.cycles is not None else default_cycle_count(sparse)
            stimulus = load_stimulus(args.stimulus, program, cycles)
        else:
            raise StimulusError("--run requires --stimulus")
        core = DebuggerCore(CycleSim(netlist, stimulus), table)
    server = DebugServer(core, port=args.port, source_root=args.source_root)
    server.start()
    server.start_workload(paused=True)
    deadline = _time.monotonic() + 5
    while not core.paused and _time.monotonic() < deadline:
        _time.sleep(0.001)
    return server


def _session(args) -> int:
    server = None
    if args.connect:
        url = args.connect
    elif args.vcd or args.run:
        server = _self_host(args)
        url = f"ws://127.0.0.1:{server.port}"
        print(f"self-hosting debug server on port {server.port}", file=sys.stderr)
    else:
        print("hgdbg: error: need --connect, --vcd, or --run", file=sys.stderr)
        return 1

    try:
        client = ProtocolClient(url)
    except Exception as e:
        print(f"hgdbg: connection refused: {url} ({e})", file=sys.stderr)
        return 1

    try:
        if args.script:
            with open(args.script, encoding="utf-8") as f:
                for raw in f:
                    line = raw.split("#", 1)[0].strip()
                    if not line:
                        continue
                    print(f"(hgdbg) {line}")
                    if _command(client, line) == "quit":
                        break
                else:
                    print("(hgdbg) q")
        else:
            while True:
                try:
                    line = input("(hgdbg) ").strip()
                except EOFError:
                    break
                if not line:
                    continue
                if _command(client, line) == "quit":
                    break
    finally:
        client.close()
        if server is not None:
            server.stop()
    return 0


_RESUMES = {"c": "continue", "n": "step-over", "rc": "reverse-continue", "rn": "reverse-step"}


def _command(client: ProtocolClient, line: str) -> str:
    """Execute one REPL command; prints results. Returns "quit" to exit."""
    parts = line.split()
    cmd, rest = parts[0], parts[1:]
    try:
        if cmd == "q":
            return "quit"
        if cmd == "b":
            _cmd_break(client, rest)
        elif cmd == "d":
            removed = client.call("remove-breakpoint", {"id": int(rest[0])})["removed"]
            print(f"deleted breakpoints {removed}")
        elif cmd in _RESUMES:
            client.call(_RESUMES[cmd], {})
            _report_next_stop(client)
        elif cmd == "p":
            result = client.call("evaluate", {"expr": " ".join(rest)})["result"]
            print(f"{' '.join(rest)} = {_fmt_value(result)}")
        elif cmd == "info":
            _cmd_info(client, rest)
        elif cmd == "set":
            client.call("set-value", {"name": rest[0], "value": int(rest[1], 0)})
            print("ok")
        elif cmd == "time":
            client.call("set-time", {"time": int(rest[0])})
            print("ok")
        else:
            print(f"unknown command {cmd!r} (b d c n rc rn p info set time q)")
    except ProtocolError as e:
        print(f"error: {e}")
    except (IndexError, ValueError):
        print(f"usage error in {line!r}")
    return "ok"


def _cmd_break(client: ProtocolClient, rest: list[str]):
    if not rest:
        print("usage: b <file>:<line>[:<col>] [if <expr>]")
        return
    location = rest[0]
    condition = None
    if len(rest) >= 2 and rest[1] == "if":
        condition = " ".join(rest[2:])
    parts = location.rsplit(":", 2)
    if len(parts) >= 3 and parts[-1].isdigit() and parts[-2].isdigit():
        file, line, column = parts[0], int(parts[1]), int(parts[2])
    else:
        file, line = location.rsplit(":", 1)[0], int(location.rsplit(":", 1)[1])
        column = None
    payload = {"file": file, "line": line}
    if column is not None:
        payload["column"] = column
    if condition:
        payload["condition"] = condition
    ids = client.call("set-breakpoint", payload)["ids"]
    print(f"breakpoint ids {ids}")


def _report_next_stop(client: ProtocolClient):
    event = client.wait_event("stopped", "ended")
    payload = event["payload"]
    if event["event"] == "ended":
        print(f"simulation ended at time {payload['time']}")
        return
    source = payload.get("source")
    where = ""
    if source:
        where = (f" at {source['file']}:{source['line']}:{source['column']}"
                 f" ordinal {source['ordinal']}")
    print(f"stopped #{payload['stop_id']}{where} time {payload['time']}"
          f" [{payload['reason']}]")
    if payload.get("notice"):
        print(f"  note: {payload['notice']}")
    for thread in payload.get("threads", []):
        fired = " (fired)" if thread.get("fired") else ""
        print(f"  thread {thread['instance']}{fired}")


def _cmd_info(client: ProtocolClient, rest: list[str]):
    category = rest[0] if rest else ""
    if category == "breakpoints":
        rows = client.call("list-breakpoints", {})["breakpoints"]
        if not rows:
            print("no breakpoints")
        for row in rows:
            condition = f" if {row['condition']}" if row.get("condition") else ""
            print(f"#{row['id']} {row['file']}:{row['line']}:{row['column']}"
                  f" ordinal {row['ordinal']} instance {row['instance']}{condition}")
        return
    if category == "threads":
        threads = client.call("info", {"category": "threads"})["threads"]
        for t in threads:
            fired = " (fired)" if t.get("fired") else ""
            bp = f" breakpoint {t['breakpoint_id']}" if "breakpoint_id" in t else ""
            print(f"thread {t['instance']}{bp}{fired}")
        return
    if category == "time":
        print(f"time {client.call('info', {'category': 'time'})['time']}")
        return
    print("usage: info threads|breakpoints|time")


def _fmt_value(wire) -> str:
    if isinstance(wire, dict) and "value" in wire:
        if wire["value"] == "unavailable":
            return "unavailable"
        width = wire.get("width")
        return f"{wire['value']} ({width} bits)" if width else str(wire["value"])
    if isinstance(wire, list):
        return "[" + ", ".join(_fmt_value(v) for v in wire) + "]"
    if isinstance(wire, dict):
        return "{" + ", ".join(f"{k}: {_fmt_value(v)}" for k, v in wire.items()) + "}"
    return str(wire)


if __name__ == "__main__":
    sys.exit(main())
