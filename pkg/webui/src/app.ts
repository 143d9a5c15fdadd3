/**
 * Browser bootstrap: wires the WebSocket transport, session controller, and
 * renderers to the DOM. All logic lives in state.ts/client.ts/render.ts;
 * this file only does event plumbing (and is not covered by the headless
 * tests, which drive the Session directly).
 */

import { Session, WebSocketTransport } from "./client.js";
import { renderApp } from "./render.js";

function currentFile(session: Session): string {
  const open = Object.keys(session.state.files);
  return open.length > 0 ? open[0] : "";
}

export function mount(root: HTMLElement, url: string, file: string): Session {
  let session: Session;
  const transport = new WebSocketTransport(url, () => {
    session.connected();
    session.openFile(file);
  });
  session = new Session(transport);

  const redraw = () => {
    root.innerHTML = renderApp(session.state, currentFile(session) || file);
  };
  session.subscribe(redraw);

  root.addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    const action = target.getAttribute("data-action");
    if (action) {
      session.control(action as Parameters<Session["control"]>[0]);
      return;
    }
    const gutter = target.closest(".gutter");
    if (gutter) {
      const line = Number(gutter.getAttribute("data-line"));
      const conditionBox = document.querySelector<HTMLInputElement>("#condition");
      session.toggleBreakpoint(file, line, conditionBox?.value || undefined);
      return;
    }
    const thread = target.closest(".thread");
    if (thread) {
      session.selectThread(thread.getAttribute("data-thread") ?? "");
    }
  });

  const exprBox = document.querySelector<HTMLInputElement>("#expr");
  exprBox?.addEventListener("keydown", (event) => {
    if (event.key === "Enter" && exprBox.value) {
      session.evaluate(exprBox.value);
      exprBox.value = "";
    }
  });

  redraw();
  return session;
}

declare global {
  interface Window {
    hgdbgMount: typeof mount;
  }
}

if (typeof window !== "undefined") {
  window.hgdbgMount = mount;
}
