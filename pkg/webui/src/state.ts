/**
 * Session state as a pure fold over the message log.
 *
 * Every sent request and received message is an entry; `reduce` consumes
 * entries and returns a new state. Replaying a recorded transcript through
 * the reducer therefore reconstructs the exact UI state - the invariant the
 * replay tests pin down. The breakpoint list mirrors `list-breakpoints`
 * responses only: the server is the source of truth, never optimism.
 */

import type {
  BreakpointRow,
  Capabilities,
  Frame,
  Message,
  Request,
  StopPayload,
} from "./protocol.js";

export interface ConsoleEntry {
  expr: string;
  result: string;
}

export interface SessionView {
  connection: "disconnected" | "connected";
  files: Record<string, string>;
  breakpoints: BreakpointRow[];
  capabilities: Capabilities | null;
  stop: StopPayload | null;
  frames: Frame[] | null;
  selectedThread: string | null;
  resumePending: boolean; // a resume was sent; wait for `resumed` before another
  running: boolean;
  ended: boolean;
  time: number;
  console: ConsoleEntry[];
  toasts: string[];
  /** in-flight requests by token, so responses can be interpreted */
  pending: Record<string, { command: string; payload: Record<string, unknown> }>;
}

export const RESUME_COMMANDS = new Set([
  "continue",
  "step-over",
  "reverse-continue",
  "reverse-step",
]);

export function initialState(): SessionView {
  return {
    connection: "disconnected",
    files: {},
    breakpoints: [],
    capabilities: null,
    stop: null,
    frames: null,
    selectedThread: null,
    resumePending: false,
    running: false,
    ended: false,
    time: 0,
    console: [],
    toasts: [],
    pending: {},
  };
}

export type LogEntry =
  | { dir: "send"; message: Request }
  | { dir: "recv"; message: Message }
  | { dir: "open" }
  | { dir: "close" };

export function reduce(state: SessionView, entry: LogEntry): SessionView {
  if (entry.dir === "open") {
    return { ...state, connection: "connected" };
  }
  if (entry.dir === "close") {
    return { ...state, connection: "disconnected" };
  }
  if (entry.dir === "send") {
    const next: SessionView = {
      ...state,
      pending: { ...state.pending, [entry.message.token]: entry.message },
    };
    if (RESUME_COMMANDS.has(entry.message.command)) {
      next.resumePending = true;
    }
    return next;
  }
  const message = entry.message;
  if (message.type === "event") {
    if (message.event === "stopped") {
      const stop = message.payload as unknown as StopPayload;
      const selected =
        stop.threads.length > 0 ? stop.threads[0].instance : state.selectedThread;
      return {
        ...state,
        stop,
        frames: null,
        selectedThread: selected,
        running: false,
        resumePending: false,
        time: stop.time,
      };
    }
    if (message.event === "resumed") {
      return { ...state, running: true, resumePending: false, stop: null, frames: null };
    }
    // ended
    const time = (message.payload as { time?: number }).time ?? state.time;
    return { ...state, running: false, ended: true, resumePending: false, time };
  }
  // response: correlate with the request that carries its meaning
  const request = state.pending[message.token];
  const pending = { ...state.pending };
  delete pending[message.token];
  const base = { ...state, pending };
  if (!request) {
    return base;
  }
  if (message.status === "error") {
    const next = { ...base, toasts: [...state.toasts, `${request.command}: ${message.reason}`] };
    if (RESUME_COMMANDS.has(request.command)) {
      next.resumePending = false;
    }
    return next;
  }
  switch (request.command) {
    case "list-breakpoints":
      return { ...base, breakpoints: (message.payload.breakpoints as BreakpointRow[]) ?? [] };
    case "info": {
      const category = request.payload.category;
      if (category === "capabilities") {
        return { ...base, capabilities: message.payload.capabilities as Capabilities };
      }
      if (category === "file") {
        const path = request.payload.path as string;
        const content = message.payload.content as string;
        return { ...base, files: { ...state.files, [path]: content } };
      }
      if (category === "time") {
        return { ...base, time: message.payload.time as number };
      }
      return base;
    }
    case "frames":
      return { ...base, frames: (message.payload.frames as Frame[]) ?? null };
    case "evaluate": {
      const expr = request.payload.expr as string;
      const result = message.payload.result;
      return { ...base, console: [...state.console, { expr, result: formatValue(result) }] };
    }
    default:
      return base;
  }
}

export function formatValue(v: unknown): string {
  if (Array.isArray(v)) {
    return `[${v.map(formatValue).join(", ")}]`;
  }
  if (v !== null && typeof v === "object") {
    const record = v as Record<string, unknown>;
    if (typeof record.value === "string") {
      return record.value === "unavailable" ? "unavailable" : String(record.value);
    }
    const members = Object.entries(record).map(([k, m]) => `${k}: ${formatValue(m)}`);
    return `{${members.join(", ")}}`;
  }
  return String(v);
}

/** Breakpoint ids grouped per source line (for the gutter's xN badges). */
export function gutterCounts(state: SessionView, file: string): Map<number, number[]> {
  const out = new Map<number, number[]>();
  for (const bp of state.breakpoints) {
    if (bp.file === file || bp.file.endsWith("/" + file)) {
      const ids = out.get(bp.line) ?? [];
      ids.push(bp.id);
      out.set(bp.line, ids);
    }
  }
  return out;
}

export function selectedFrame(state: SessionView): Frame | null {
  if (!state.frames || state.frames.length === 0) {
    return null;
  }
  const byThread = state.frames.find((f) => f.thread === state.selectedThread);
  return byThread ?? state.frames[0];
}
