"""Drive the debugger through the wire protocol.

Self-hosts a debug server over a live simulation of the example design,
connects a WebSocket client, and runs a short session: set a breakpoint,
continue to the first stop, evaluate expressions, inspect frames. This is
exactly what the hgdbg CLI and the web frontend do.

Run:  python3 demos/04_protocol_session.py
"""

import json
import time
from pathlib import Path

from hgdbg.client import ProtocolClient
from hgdbg.frontend import parse
from hgdbg.lowering import compile_program
from hgdbg.runtime import DebuggerCore
from hgdbg.server import DebugServer
from hgdbg.simbackends import CycleSim

HERE = Path(__file__).parent
program = parse((HERE / "sum.mh").read_text(), "sum.mh")
netlist, _annotations, table = compile_program(program, "debug")

stimulus = [{"data_0": 3, "data_1": 2, "rst": 0}, {"data_0": 1, "data_1": 1, "rst": 0}]
core = DebuggerCore(CycleSim(netlist, stimulus), table)
server = DebugServer(core, port=0, source_root=str(HERE))
port = server.start()
server.start_workload(paused=True)
while not core.paused:
    time.sleep(0.002)
print(f"serving on ws://127.0.0.1:{port}\n")

with ProtocolClient(f"ws://127.0.0.1:{port}") as client:
    print("> set-breakpoint sum.mh:9")
    print("<", client.call("set-breakpoint", {"file": "sum.mh", "line": 9}))

    print("> continue")
    client.call("continue", {})
    stopped = client.wait_event("stopped")["payload"]
    print("< stopped:", json.dumps(stopped, sort_keys=True))

    print("> evaluate sum")
    print("<", client.call("evaluate", {"expr": "sum"}))

    print("> evaluate data[0] % 2")
    print("<", client.call("evaluate", {"expr": "data[0] % 2"}))

    print(f"> frames {stopped['stop_id']}")
    frames = client.call("frames", {"stop_id": stopped["stop_id"]})["frames"]
    print("< locals:", json.dumps(frames[0]["locals"]))

    print("> continue (to the end)")
    client.call("continue", {})
    while True:
        event = client.wait_event("stopped", "ended")
        if event["event"] == "ended":
            print("< ended at time", event["payload"]["time"])
            break
        client.call("continue", {})

server.stop()
