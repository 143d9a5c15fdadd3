/**
 * Transport abstraction and the debugger session controller.
 *
 * The controller owns the state (a pure fold over the log, see state.ts)
 * and exposes user intents (toggle a breakpoint, continue, evaluate). A
 * real WebSocket transport drives the browser app; tests substitute a mock
 * transport that replays a recorded transcript.
 */

import type { Message, Request } from "./protocol.js";
import {
  LogEntry,
  RESUME_COMMANDS,
  SessionView,
  initialState,
  reduce,
} from "./state.js";

export interface Transport {
  send(message: Request): void;
  onMessage(handler: (message: Message) => void): void;
  close(): void;
}

export class WebSocketTransport implements Transport {
  private socket: WebSocket;
  private handlers: ((message: Message) => void)[] = [];

  constructor(url: string, onOpen: () => void) {
    this.socket = new WebSocket(url);
    this.socket.onopen = onOpen;
    this.socket.onmessage = (raw) => {
      const message = JSON.parse(String(raw.data)) as Message;
      for (const handler of this.handlers) {
        handler(message);
      }
    };
  }

  send(message: Request): void {
    this.socket.send(JSON.stringify(message));
  }

  onMessage(handler: (message: Message) => void): void {
    this.handlers.push(handler);
  }

  close(): void {
    this.socket.close();
  }
}

export class Session {
  state: SessionView = initialState();
  log: LogEntry[] = [];
  private tokenCounter = 0;
  private listeners: ((state: SessionView) => void)[] = [];

  constructor(private transport: Transport) {
    transport.onMessage((message) => {
      this.apply({ dir: "recv", message });
      if (message.type === "event" && message.event === "stopped") {
        // Frames are fetched eagerly for the new stop.
        const stopId = (message.payload as { stop_id: number }).stop_id;
        this.request("frames", { stop_id: stopId });
      }
    });
  }

  subscribe(listener: (state: SessionView) => void): void {
    this.listeners.push(listener);
  }

  private apply(entry: LogEntry): void {
    this.log.push(entry);
    this.state = reduce(this.state, entry);
    for (const listener of this.listeners) {
      listener(this.state);
    }
  }

  request(command: string, payload: Record<string, unknown> = {}): void {
    this.tokenCounter += 1;
    const message: Request = {
      type: "request",
      token: `t${this.tokenCounter}`,
      command,
      payload,
    };
    this.apply({ dir: "send", message });
    this.transport.send(message);
  }

  // --- user intents ---

  connected(): void {
    this.apply({ dir: "open" });
    this.request("info", { category: "capabilities" });
    this.request("list-breakpoints");
  }

  openFile(path: string): void {
    this.request("info", { category: "file", path });
  }

  /** Gutter click: toggle all breakpoints on a source line, then reconcile. */
  toggleBreakpoint(file: string, line: number, condition?: string): void {
    const existing = this.state.breakpoints.filter(
      (bp) => (bp.file === file || bp.file.endsWith("/" + file)) && bp.line === line,
    );
    if (existing.length > 0) {
      this.request("remove-breakpoint", { file: existing[0].file, line });
    } else {
      const payload: Record<string, unknown> = { file, line };
      if (condition) {
        payload.condition = condition;
      }
      this.request("set-breakpoint", payload);
    }
    this.request("list-breakpoints");
  }

  /** Control bar. Resumes are gated: nothing is sent until the previous
   * resume's `resumed` event came back (no optimistic double-continue). */
  control(action: "continue" | "step-over" | "reverse-continue" | "reverse-step" | "pause"): boolean {
    if (RESUME_COMMANDS.has(action) && this.state.resumePending) {
      return false;
    }
    this.request(action);
    return true;
  }

  selectThread(instance: string): void {
    this.state = { ...this.state, selectedThread: instance };
    for (const listener of this.listeners) {
      listener(this.state);
    }
  }

  evaluate(expr: string): void {
    this.request("evaluate", { expr, thread: this.state.selectedThread ?? undefined });
  }

  jumpToTime(time: number): void {
    this.request("set-time", { time });
    this.request("info", { category: "time" });
  }
}
