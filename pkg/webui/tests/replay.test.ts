/**
 * UI replay test: feed the recorded protocol transcript of the example
 * session through the session controller and assert what the renderers
 * produce - two breakpoint ids on the gutter, a stop highlight, one
 * hardware thread, locals {sum: 0}, and reverse controls that follow the
 * capabilities payload. Headless: no DOM, no network.
 */

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { Session } from "../src/client.js";
import {
  renderControls,
  renderSource,
  renderThreads,
  renderVariables,
  renderConsole,
} from "../src/render.js";
import { initialState, reduce, gutterCounts, selectedFrame } from "../src/state.js";
import type { StopPayload } from "../src/protocol.js";
import { MockTransport, RecordedEntry } from "./mock.js";

const HERE = dirname(fileURLToPath(import.meta.url));

function loadTranscript(name: string): RecordedEntry[] {
  const raw = readFileSync(join(HERE, "fixtures", name), "utf-8");
  return (JSON.parse(raw) as { entries: RecordedEntry[] }).entries;
}

function runListingSession() {
  const transport = new MockTransport(loadTranscript("listing_session.json"));
  const session = new Session(transport);
  session.connected(); // info capabilities + list-breakpoints
  transport.flush();
  session.openFile("sum.mh");
  transport.flush();
  session.toggleBreakpoint("sum.mh", 9); // set-breakpoint + list-breakpoints
  transport.flush();
  const accepted = session.control("continue");
  const rejected = session.control("continue"); // resume pending: must not send
  transport.flush(); // ack, resumed, stopped -> auto frames request
  session.evaluate("sum");
  transport.flush();
  return { session, transport, accepted, rejected };
}

describe("listing session replay", () => {
  it("renders two breakpoint ids on the gutter", () => {
    const { session } = runListingSession();
    const counts = gutterCounts(session.state, "sum.mh");
    expect(counts.get(9)).toHaveLength(2);
    const html = renderSource(session.state, "sum.mh");
    expect(html).toContain("●×2"); // the x2 badge
  });

  it("highlights the stopped line", () => {
    const { session } = runListingSession();
    const html = renderSource(session.state, "sum.mh");
    expect(html).toContain(`class="line stopped" data-line="9"`);
  });

  it("shows exactly one hardware thread", () => {
    const { session } = runListingSession();
    expect(session.state.stop).not.toBeNull();
    const stop = session.state.stop as StopPayload;
    expect(stop.threads).toHaveLength(1);
    expect(stop.threads[0].instance).toBe("acc");
    const html = renderThreads(session.state);
    expect(html).toContain(`data-thread="acc"`);
    expect(html).toContain("(fired)");
  });

  it("frame locals show sum = 0 via the pre-statement SSA mapping", () => {
    const { session } = runListingSession();
    const frame = selectedFrame(session.state);
    expect(frame).not.toBeNull();
    const locals = Object.fromEntries(frame!.locals);
    expect(locals.sum).toEqual({ value: "0", width: 8 });
    const html = renderVariables(session.state);
    expect(html).toContain(`data-var="sum"`);
    expect(html).toMatch(/data-var="sum"[^<]*<span class="name">sum<\/span> <span class="value">0<\/span>/);
    // arrays regroup: data renders as a two-element list
    expect(html).toContain(`data-var="data"`);
    expect(html).toContain(`<li><span class="name">[0]</span>`);
  });

  it("evaluate results land in the console", () => {
    const { session } = runListingSession();
    expect(session.state.console).toEqual([{ expr: "sum", result: "0" }]);
    expect(renderConsole(session.state)).toContain("<code>sum</code>");
  });

  it("reverse controls are enabled on a trace backend", () => {
    const { session } = runListingSession();
    expect(session.state.capabilities?.can_set_time).toBe(true);
    const html = renderControls(session.state);
    expect(html).toContain(`data-action="reverse-step">`); // no disabled attr
    expect(html).not.toContain(`data-action="reverse-step" disabled`);
  });

  it("a second continue is withheld until the first resumes", () => {
    const { transport, accepted, rejected } = runListingSession();
    expect(accepted).toBe(true);
    expect(rejected).toBe(false);
    const continues = transport.sent.filter((m) => m.command === "continue");
    expect(continues).toHaveLength(1);
  });

  it("state is a pure function of the log", () => {
    const { session } = runListingSession();
    const refolded = session.log.reduce(reduce, initialState());
    expect(refolded).toEqual(session.state);
  });

  it("consumes the whole recorded transcript", () => {
    const { transport } = runListingSession();
    expect(transport.exhausted).toBe(true);
  });
});

describe("capability-driven control states", () => {
  it("reverse-step is disabled when the backend cannot set time", () => {
    const transport = new MockTransport(loadTranscript("cyclesim_capabilities.json"));
    const session = new Session(transport);
    session.connected();
    transport.flush();
    expect(session.state.capabilities).toEqual({
      can_set_value: true,
      can_set_time: false,
      reverse: "intra-cycle",
    });
    // Re-use a stop from the replay transcript: the reducer is pure, so a
    // synthetic stopped event puts the UI in the stopped state.
    const stopped = loadTranscript("listing_session.json").find(
      (e) => e.dir === "recv" && (e.message as { event?: string }).event === "stopped",
    )!;
    session.state = reduce(session.state, {
      dir: "recv",
      message: stopped.message as never,
    });
    const html = renderControls(session.state);
    expect(html).toContain(`data-action="continue">`);
    expect(html).toContain(`data-action="reverse-continue" disabled`);
    expect(html).toContain(`data-action="reverse-step" disabled`);
  });
});

describe("error toasts", () => {
  it("a rejected set-breakpoint surfaces as a toast", () => {
    // Hand-built mini transcript: blank line -> server error.
    const entries: RecordedEntry[] = [
      {
        dir: "send",
        message: {
          type: "request", token: "t1", command: "set-breakpoint",
          payload: { file: "sum.mh", line: 2 },
        },
      },
      {
        dir: "recv",
        message: {
          type: "response", token: "t1", command: "set-breakpoint",
          status: "error", reason: "no breakpoint at sum.mh:2", payload: {},
        },
      },
      { dir: "send", message: { type: "request", token: "t2", command: "list-breakpoints", payload: {} } },
      {
        dir: "recv",
        message: {
          type: "response", token: "t2", command: "list-breakpoints",
          status: "success", payload: { breakpoints: [] },
        },
      },
    ];
    const transport = new MockTransport(entries);
    const session = new Session(transport);
    session.toggleBreakpoint("sum.mh", 2);
    transport.flush();
    expect(session.state.toasts).toEqual(["set-breakpoint: no breakpoint at sum.mh:2"]);
    expect(session.state.breakpoints).toEqual([]);
  });

  it("conditional breakpoints pass the condition field", () => {
    const entries: RecordedEntry[] = [
      {
        dir: "send",
        message: {
          type: "request", token: "t1", command: "set-breakpoint",
          payload: { file: "sum.mh", line: 9, condition: "sum > 1" },
        },
      },
      {
        dir: "recv",
        message: {
          type: "response", token: "t1", command: "set-breakpoint",
          status: "success", payload: { ids: [1, 2] },
        },
      },
      { dir: "send", message: { type: "request", token: "t2", command: "list-breakpoints", payload: {} } },
      {
        dir: "recv",
        message: {
          type: "response", token: "t2", command: "list-breakpoints",
          status: "success", payload: { breakpoints: [] },
        },
      },
    ];
    const transport = new MockTransport(entries);
    const session = new Session(transport);
    session.toggleBreakpoint("sum.mh", 9, "sum > 1");
    transport.flush();
    expect(transport.sent[0].payload).toEqual({ file: "sum.mh", line: 9, condition: "sum > 1" });
  });
});
