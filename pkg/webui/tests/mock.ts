/**
 * Transcript-replaying mock transport.
 *
 * Seeded with a recorded session (see tests/fixtures/), it asserts that the
 * app sends the same command sequence the recording contains, and feeds back
 * the recorded responses/events with tokens rewritten to the live ones.
 * Delivery is explicit (flush()), so tests can observe in-between states
 * like the resume-pending window.
 */

import type { Message, Request } from "../src/protocol.js";
import type { Transport } from "../src/client.js";

export interface RecordedEntry {
  dir: "send" | "recv";
  message: Record<string, unknown>;
}

export class MockTransport implements Transport {
  private cursor = 0;
  private handlers: ((message: Message) => void)[] = [];
  private queue: Record<string, unknown>[] = [];
  private tokenMap = new Map<string, string>();
  sent: Request[] = [];

  constructor(private entries: RecordedEntry[]) {}

  send(message: Request): void {
    const expected = this.entries[this.cursor];
    if (!expected || expected.dir !== "send") {
      throw new Error(`unexpected send of ${message.command}: transcript exhausted`);
    }
    const recorded = expected.message as unknown as Request;
    if (recorded.command !== message.command) {
      throw new Error(
        `transcript mismatch: app sent ${message.command}, recording has ${recorded.command}`,
      );
    }
    this.tokenMap.set(recorded.token, message.token);
    this.sent.push(message);
    this.cursor += 1;
    while (this.cursor < this.entries.length && this.entries[this.cursor].dir === "recv") {
      this.queue.push(this.entries[this.cursor].message);
      this.cursor += 1;
    }
  }

  onMessage(handler: (message: Message) => void): void {
    this.handlers.push(handler);
  }

  /** Deliver queued messages; handler-triggered sends may queue more. */
  flush(): void {
    while (this.queue.length > 0) {
      const raw = JSON.parse(JSON.stringify(this.queue.shift()));
      if (raw.type === "response") {
        raw.token = this.tokenMap.get(raw.token) ?? raw.token;
      }
      for (const handler of this.handlers) {
        handler(raw as Message);
      }
    }
  }

  get exhausted(): boolean {
    return this.cursor >= this.entries.length && this.queue.length === 0;
  }

  close(): void {}
}
