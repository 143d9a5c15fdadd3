"""Forward and reverse debugging over a VCD trace.

Simulates the design once while dumping a VCD, then replays the trace with
the debugger attached: run forward collecting stops, reverse-continue all
the way back to the origin, and run forward again. The second forward pass
reproduces the first one bit-for-bit, frames included - the trace is the
time machine.

Run:  python3 demos/03_reverse_replay.py
"""

import io
from pathlib import Path

from hgdbg.frontend import parse
from hgdbg.lowering import compile_program
from hgdbg.runtime import DebuggerCore
from hgdbg.simbackends import CycleSim, ReplayBackend, parse_vcd

HERE = Path(__file__).parent
program = parse((HERE / "sum.mh").read_text(), "sum.mh")
netlist, _annotations, table = compile_program(program, "debug")

stimulus = [
    {"data_0": 3, "data_1": 2, "rst": 0},
    {"data_0": 1, "data_1": 1, "rst": 0},
]
sim = CycleSim(netlist, stimulus)
buffer = io.StringIO()
sim.dump_vcd(buffer)
sim.run()
sim.close()
print(f"dumped a {len(buffer.getvalue())} byte VCD trace\n")

replay = ReplayBackend(parse_vcd(io.StringIO(buffer.getvalue())))
core = DebuggerCore(replay, table)
core.insert_breakpoint("sum.mh", 9)
print("capabilities:", core.capabilities(), "\n")

forward, reverse, again = [], [], []
phase = ["forward"]


def describe(stop):
    return f"t={stop.time} ordinal={stop.key[3]} sum={dict(stop.frames[0].locals)['sum']}"


def driver(stop):
    if phase[0] == "forward":
        forward.append(stop)
        print(f"forward:  {describe(stop)}")
        if stop.time == 10 and stop.key[3] == 1:  # the last stop of the trace
            phase[0] = "reverse"
            return "reverse_continue"
        return "continue"
    if phase[0] == "reverse":
        if stop.reason == "boundary":
            print(f"boundary: {stop.notice}")
            phase[0] = "again"
            return "continue"
        reverse.append(stop)
        print(f"reverse:  {describe(stop)}")
        return "reverse_continue"
    again.append(stop)
    print(f"again:    {describe(stop)}")
    return "continue"


core.set_controller(driver)
core.run()

identical = [(s.time, s.key, s.frames) for s in again] == \
            [(s.time, s.key, s.frames) for s in forward]
print(f"\nsecond forward pass identical to the first: {identical}")
