"""Source-level breakpoints on a live cycle simulation.

Sets a breakpoint on the accumulation line and walks every stop with a
scripted controller, printing reconstructed frames. With data = [3, 2] only
the i=0 copy fires (3 is odd); with data = [1, 1] both copies fire and the
frames show the running partial sums 0 then 1.

Run:  python3 demos/02_breakpoints_live.py
"""

from pathlib import Path

from hgdbg.frontend import parse
from hgdbg.lowering import compile_program
from hgdbg.runtime import DebuggerCore
from hgdbg.simbackends import CycleSim

HERE = Path(__file__).parent
program = parse((HERE / "sum.mh").read_text(), "sum.mh")
netlist, _annotations, table = compile_program(program, "debug")

stimulus = [
    {"data_0": 3, "data_1": 2, "rst": 0},
    {"data_0": 1, "data_1": 1, "rst": 0},
    {"data_0": 0, "data_1": 0, "rst": 0},
]
core = DebuggerCore(CycleSim(netlist, stimulus), table)
ids = core.insert_breakpoint("sum.mh", 9)
print(f"inserted breakpoints {ids} (one per unrolled copy)\n")


def show(value):
    if isinstance(value, list):
        return "[" + ", ".join(show(v) for v in value) + "]"
    if isinstance(value, dict):
        return "{" + ", ".join(f"{k}: {show(v)}" for k, v in value.items()) + "}"
    return str(value)


def on_stop(stop):
    file, line, column, ordinal = stop.key
    print(f"stop #{stop.stop_id} at {file}:{line} ordinal {ordinal} "
          f"(cycle {stop.time // 10})")
    for frame in stop.frames:
        locals_text = ", ".join(f"{n}={show(v)}" for n, v in frame.locals)
        print(f"  thread {frame.thread}: {locals_text}")
    return "continue"


core.set_controller(on_stop)
core.run()
print("\nsimulation ended; cycle 2 produced no stops because 0 and 0 are even")
