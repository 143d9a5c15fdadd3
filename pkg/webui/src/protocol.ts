/**
 * Wire protocol types, mirroring docs/protocol.md (the normative schema).
 */

export type WireValue =
  | { value: string; width?: number }
  | WireValue[]
  | { [member: string]: WireValue };

export interface Request {
  type: "request";
  token: string;
  command: string;
  payload: Record<string, unknown>;
}

export interface Response {
  type: "response";
  token: string;
  command: string;
  status: "success" | "error";
  reason?: string;
  payload: Record<string, unknown>;
}

export interface Event {
  type: "event";
  event: "stopped" | "resumed" | "ended";
  payload: Record<string, unknown>;
}

export type Message = Response | Event;

export interface SourceKey {
  file: string;
  line: number;
  column: number;
  ordinal: number;
}

export interface ThreadInfo {
  instance: string;
  breakpoint_id?: number;
  fired?: boolean;
}

export interface StopPayload {
  stop_id: number;
  time: number;
  reason: "breakpoint" | "step" | "pause" | "boundary";
  source: SourceKey | null;
  threads: ThreadInfo[];
  notice?: string;
}

export interface BreakpointRow {
  id: number;
  file: string;
  line: number;
  column: number;
  ordinal: number;
  instance: string;
  enable: string;
  condition: string | null;
}

export interface Frame {
  thread: string;
  breakpoint_id: number;
  source: SourceKey;
  time: number;
  fired: boolean;
  locals: [string, WireValue][];
  instance_vars: [string, WireValue][];
}

export interface Capabilities {
  can_set_value: boolean;
  can_set_time: boolean;
  reverse: "full" | "intra-cycle";
}

export function isScalar(v: WireValue): v is { value: string; width?: number } {
  return typeof v === "object" && !Array.isArray(v) && "value" in v &&
    typeof (v as { value: unknown }).value === "string";
}
