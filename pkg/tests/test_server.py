"""Protocol server tests: token discipline, broadcast, capability errors,
and the byte-stable two-client golden transcript."""

import io
import json
import threading
import time
from pathlib import Path

import pytest

from hgdbg.client import ProtocolClient
from hgdbg.frontend import parse
from hgdbg.lowering import compile_program
from hgdbg.runtime import DebuggerCore
from hgdbg.server import DebugServer
from hgdbg.simbackends import CycleSim, ReplayBackend, parse_vcd

from conftest import FIXTURES, SUM_LINE

GOLDEN = Path(__file__).parent / "goldens"

SUM_STIM = [
    {"data_0": 3, "data_1": 2, "rst": 0},
    {"data_0": 1, "data_1": 1, "rst": 0},
]


def build_core(sum_program, replay=True, stimulus=None):
    netlist, _anns, table = compile_program(sum_program, "debug")
    stim = stimulus or SUM_STIM
    sim = CycleSim(netlist, stim)
    if not replay:
        return DebuggerCore(sim, table)
    buffer = io.StringIO()
    sim.dump_vcd(buffer)
    sim.run()
    sim.close()
    backend = ReplayBackend(parse_vcd(io.StringIO(buffer.getvalue())))
    return DebuggerCore(backend, table)


@pytest.fixture()
def served(sum_program):
    """A paused, served replay session plus a connected-client factory."""
    core = build_core(sum_program)
    server = DebugServer(core, port=0, source_root=str(FIXTURES))
    port = server.start()
    server.start_workload(paused=True)
    deadline = time.monotonic() + 5
    while not core.paused and time.monotonic() < deadline:
        time.sleep(0.002)
    clients = []

    def connect():
        client = ProtocolClient(f"ws://127.0.0.1:{port}", timeout=10)
        clients.append(client)
        return client

    yield core, server, connect
    for client in clients:
        client.close()
    server.stop()


class RecordingClient:
    """Wraps a ProtocolClient, logging normalized wire traffic."""

    def __init__(self, client: ProtocolClient, tag: str, log: list):
        self.client = client
        self.tag = tag
        self.log = log

    def _normalize(self, message: dict) -> str:
        message = dict(message)
        if "token" in message:
            message["token"] = "#"
        return json.dumps(message, sort_keys=True)

    def call(self, command, payload=None):
        token = self.client.send_request(command, payload)
        self.log.append(f"{self.tag}> " + self._normalize(
            {"type": "request", "token": token, "command": command, "payload": payload or {}}
        ))
        while True:
            message = self.client.recv_message()
            if message.get("type") == "event":
                self.client._events.append(message)
                continue
            self.log.append(f"{self.tag}< " + self._normalize(message))
            return message

    def drain_events(self, count: int):
        for _ in range(count):
            event = self.client.next_event(timeout=10)
            self.log.append(f"{self.tag}< " + self._normalize(event))


class TestProtocol:
    def test_set_breakpoint_returns_two_ids(self, served):
        _core, _server, connect = served
        client = connect()
        payload = client.call("set-breakpoint", {"file": "sum.mh", "line": SUM_LINE})
        assert len(payload["ids"]) == 2

    def test_malformed_json_keeps_connection_open(self, served):
        _core, _server, connect = served
        client = connect()
        client._ws.send("this is not json {")
        response = client.recv_message()
        assert response["status"] == "error"
        assert "malformed" in response["reason"]
        # The connection is still usable.
        assert client.call("info", {"category": "time"})["time"] == 0

    def test_unknown_command(self, served):
        _core, _server, connect = served
        client = connect()
        response = client.request("frobnicate", {})
        assert response["status"] == "error"
        assert "unknown command" in response["reason"]

    def test_broadcast_to_both_clients(self, served):
        _core, _server, connect = served
        c1, c2 = connect(), connect()
        c1.call("set-breakpoint", {"file": "sum.mh", "line": SUM_LINE})
        c1.call("continue", {})
        e1 = c1.wait_event("stopped", timeout=10)
        e2 = c2.wait_event("stopped", timeout=10)
        assert e1["payload"] == e2["payload"]
        assert e1["payload"]["reason"] == "breakpoint"

    def test_client_disconnect_while_paused(self, served):
        core, _server, connect = served
        c1, c2 = connect(), connect()
        c1.call("set-breakpoint", {"file": "sum.mh", "line": SUM_LINE})
        c1.call("continue", {})
        c1.wait_event("stopped", timeout=10)
        c1.close()
        time.sleep(0.05)
        assert core.paused
        # The remaining client can observe state and resume.
        assert c2.call("evaluate", {"expr": "sum"})["result"]["value"] == "0"
        c2.wait_event("stopped", timeout=10)  # the same stop, broadcast earlier
        c2.call("continue", {})
        c2.wait_event("stopped", timeout=10)

    def test_set_value_capability_error_on_replay(self, served):
        _core, _server, connect = served
        client = connect()
        client.call("set-breakpoint", {"file": "sum.mh", "line": SUM_LINE})
        client.call("continue", {})
        client.wait_event("stopped", timeout=10)
        response = client.request("set-value", {"name": "data[1]", "value": 7})
        assert response["status"] == "error"
        assert response["reason"] == "capability"

    def test_set_time_capability_error_on_cycle_sim(self, sum_program):
        core = build_core(sum_program, replay=False)
        server = DebugServer(core, port=0)
        port = server.start()
        server.start_workload(paused=True)
        try:
            with ProtocolClient(f"ws://127.0.0.1:{port}", timeout=10) as client:
                response = client.request("set-time", {"time": 0})
                assert response["status"] == "error"
                assert response["reason"] == "capability"
        finally:
            server.stop()

    def test_evaluate_at_stop(self, served):
        _core, _server, connect = served
        client = connect()
        client.call("set-breakpoint", {"file": "sum.mh", "line": SUM_LINE})
        client.call("continue", {})
        client.wait_event("stopped", timeout=10)
        result = client.call("evaluate", {"expr": "data[0] % 2"})["result"]
        assert result["value"] == "1"

    def test_info_file_serves_only_known_sources(self, served, sum_source):
        _core, _server, connect = served
        client = connect()
        payload = client.call("info", {"category": "file", "path": "sum.mh"})
        assert payload["content"] == sum_source
        response = client.request("info", {"category": "file", "path": "/etc/passwd"})
        assert response["status"] == "error"

    def test_info_capabilities(self, served):
        _core, _server, connect = served
        client = connect()
        caps = client.call("info", {"category": "capabilities"})["capabilities"]
        assert caps == {"can_set_value": False, "can_set_time": True, "reverse": "full"}

    def test_resume_while_not_paused_is_an_error(self, served):
        core, _server, connect = served
        client = connect()
        client.call("continue", {})  # releases the initial pause stop
        client.wait_event("ended", timeout=10)
        response = client.request("continue", {})
        assert response["status"] == "error"
        assert response["reason"] == "not paused"


class TestTokenDiscipline:
    def test_interleaved_tokens_exactly_once(self, served):
        _core, _server, connect = served
        c1, c2 = connect(), connect()
        lock = threading.Lock()
        results = {"c1": [], "c2": []}

        def hammer(client, name, offset):
            for k in range(25):
                token = f"{name}-{k}"
                response = client.request("list-breakpoints", {}, token=token)
                with lock:
                    results[name].append((token, response["token"], response["status"]))

        t1 = threading.Thread(target=hammer, args=(c1, "c1", 0))
        t2 = threading.Thread(target=hammer, args=(c2, "c2", 100))
        t1.start(); t2.start(); t1.join(); t2.join()
        for name in ("c1", "c2"):
            sent = [s for s, _r, _st in results[name]]
            echoed = [r for _s, r, _st in results[name]]
            assert sent == echoed
            assert all(st == "success" for _s, _r, st in results[name])
            assert len(set(sent)) == 25

    def test_event_order_stopped_before_resumed(self, served):
        _core, _server, connect = served
        client = connect()
        client.call("set-breakpoint", {"file": "sum.mh", "line": SUM_LINE})
        observed = []
        client.call("continue", {})
        # initial pause stop resumption, then the breakpoint stop.
        for _ in range(2):
            event = client.wait_event("stopped", "resumed", timeout=10)
            observed.append((event["event"], event["payload"].get("stop_id")))
        client.call("continue", {})
        for _ in range(2):
            event = client.wait_event("stopped", "resumed", timeout=10)
            observed.append((event["event"], event["payload"].get("stop_id")))
        # For each stop id, "stopped" precedes its "resumed".
        first_index = {}
        for i, (kind, stop_id) in enumerate(observed):
            first_index.setdefault((kind, stop_id), i)
        for (kind, stop_id), i in first_index.items():
            if kind == "resumed" and ("stopped", stop_id) in first_index:
                assert first_index[("stopped", stop_id)] < i


def run_golden_session(sum_program) -> str:
    """The canned two-client session; returns the normalized transcript."""
    core = build_core(sum_program)
    server = DebugServer(core, port=0, source_root=str(FIXTURES))
    port = server.start()
    server.start_workload(paused=True)
    deadline = time.monotonic() + 5
    while not core.paused and time.monotonic() < deadline:
        time.sleep(0.002)
    log: list[str] = []
    raw1 = ProtocolClient(f"ws://127.0.0.1:{port}", timeout=10)
    raw2 = ProtocolClient(f"ws://127.0.0.1:{port}", timeout=10)
    c1 = RecordingClient(raw1, "c1", log)
    c2 = RecordingClient(raw2, "c2", log)
    try:
        c1.call("set-breakpoint", {"file": "sum.mh", "line": SUM_LINE})
        c2.call("list-breakpoints")
        c1.call("continue")            # releases the initial pause stop
        c1.drain_events(2)             # resumed(pause stop), stopped(bp t=0)
        c2.drain_events(2)
        c2.call("evaluate", {"expr": "sum"})
        c2.call("evaluate", {"expr": "data[0] % 2"})
        c1.call("set-value", {"name": "data[1]", "value": 7})  # capability error
        c1.call("continue")
        c1.drain_events(2)             # resumed, stopped (t=10 ordinal 0)
        c2.drain_events(2)
        c1.call("reverse-continue")
        c1.drain_events(2)             # resumed, stopped (back at t=0)
        c2.drain_events(2)
        c1.call("frames", {"stop_id": 4})
        c1.call("continue")
        c1.drain_events(2)
        c2.drain_events(2)
        c1.call("continue")
        c1.drain_events(2)             # resumed, stopped (t=10 ordinal 1)
        c2.drain_events(2)
        c1.call("continue")
        c1.drain_events(2)             # resumed, ended
        c2.drain_events(2)
    finally:
        raw1.close()
        raw2.close()
        server.stop()
    return "\n".join(log) + "\n"


class TestGolden:
    def test_two_client_transcript_is_byte_stable(self, sum_program):
        first = run_golden_session(sum_program)
        second = run_golden_session(sum_program)
        assert first == second

    def test_transcript_matches_golden_file(self, sum_program):
        golden_path = GOLDEN / "protocol_session.txt"
        transcript = run_golden_session(sum_program)
        assert transcript == golden_path.read_text()
