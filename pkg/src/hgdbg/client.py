"""Blocking protocol client used by the gdb-style CLI and by tests.

Single-threaded: while waiting for a response, incoming events are queued
and can be drained afterwards with next_event()/wait_event().
"""

from __future__ import annotations

import json
from collections import deque
from typing import Optional

from websockets.sync.client import connect


class ProtocolError(Exception):
    pass


class ProtocolClient:
    def __init__(self, url: str, timeout: float = 30.0):
        self.url = url
        self.timeout = timeout
        self._ws = connect(url, open_timeout=timeout)
        self._events: deque = deque()
        self._counter = 0

    def close(self):
        self._ws.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _next_token(self) -> str:
        self._counter += 1
        return f"t{self._counter}"

    def send_request(self, command: str, payload: Optional[dict] = None,
                     token: Optional[str] = None) -> str:
        token = token if token is not None else self._next_token()
        self._ws.send(json.dumps({
            "type": "request", "token": token,
            "command": command, "payload": payload or {},
        }))
        return token

    def recv_message(self, timeout: Optional[float] = None) -> dict:
        raw = self._ws.recv(timeout=self.timeout if timeout is None else timeout)
        message = json.loads(raw)
        if not isinstance(message, dict):
            raise ProtocolError(f"expected an object, got {message!r}")
        return message

    def request(self, command: str, payload: Optional[dict] = None,
                token: Optional[str] = None) -> dict:
        """Send one request and wait for its response, queueing events."""
        token = self.send_request(command, payload, token)
        while True:
            message = self.recv_message()
            if message.get("type") == "event":
                self._events.append(message)
                continue
            if message.get("type") == "response" and message.get("token") == token:
                return message
            raise ProtocolError(f"unexpected message {message!r}")

    def call(self, command: str, payload: Optional[dict] = None) -> dict:
        """request() that raises on error status; returns the payload."""
        response = self.request(command, payload)
        if response.get("status") != "success":
            raise ProtocolError(response.get("reason", "unknown error"))
        return response.get("payload", {})

    def next_event(self, timeout: Optional[float] = None) -> dict:
        if self._events:
            return self._events.popleft()
        while True:
            message = self.recv_message(timeout)
            if message.get("type") == "event":
                return message
            raise ProtocolError(f"expected an event, got {message!r}")

    def wait_event(self, *names: str, timeout: Optional[float] = None) -> dict:
        """Next event whose name is one of `names`; others are discarded."""
        while True:
            event = self.next_event(timeout)
            if event.get("event") in names:
                return event
