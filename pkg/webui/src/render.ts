/**
 * DOM-free renderers: SessionView in, HTML strings out.
 *
 * Keeping rendering pure lets the replay tests assert on markup without a
 * browser; the bootstrap in app.ts just assigns innerHTML on state changes.
 */

import { isScalar, WireValue } from "./protocol.js";
import { SessionView, gutterCounts, selectedFrame } from "./state.js";

function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderSource(state: SessionView, file: string): string {
  const content = state.files[file];
  if (content === undefined) {
    return `<div class="source empty">no source loaded</div>`;
  }
  const counts = gutterCounts(state, file);
  const stopLine =
    state.stop?.source &&
    (state.stop.source.file === file || state.stop.source.file.endsWith("/" + file))
      ? state.stop.source.line
      : null;
  const rows = content.replace(/\n$/, "").split("\n").map((text, index) => {
    const line = index + 1;
    const ids = counts.get(line);
    const marker = ids
      ? `<span class="bp" title="ids ${ids.join(",")}">●×${ids.length}</span>`
      : "";
    const classes = ["line"];
    if (stopLine === line) {
      classes.push("stopped");
    }
    return (
      `<div class="${classes.join(" ")}" data-line="${line}">` +
      `<span class="gutter" data-line="${line}">${marker}</span>` +
      `<span class="lineno">${line}</span>` +
      `<code>${escapeHtml(text)}</code></div>`
    );
  });
  return `<div class="source" data-file="${escapeHtml(file)}">${rows.join("")}</div>`;
}

export function renderThreads(state: SessionView): string {
  if (!state.stop) {
    return `<div class="threads empty">not stopped</div>`;
  }
  const rows = state.stop.threads.map((thread) => {
    const classes = ["thread"];
    if (thread.instance === state.selectedThread) {
      classes.push("selected");
    }
    const fired = thread.fired ? " (fired)" : "";
    return (
      `<div class="${classes.join(" ")}" data-thread="${escapeHtml(thread.instance)}">` +
      `${escapeHtml(thread.instance)}${fired}</div>`
    );
  });
  return `<div class="threads">${rows.join("")}</div>`;
}

function renderValue(value: WireValue): string {
  if (Array.isArray(value)) {
    const items = value
      .map((v, i) => `<li><span class="name">[${i}]</span> ${renderValue(v)}</li>`)
      .join("");
    return `<ul class="array">${items}</ul>`;
  }
  if (isScalar(value)) {
    const text = value.value === "unavailable" ? "unavailable" : value.value;
    const width = value.width !== undefined ? ` <span class="width">(${value.width}b)</span>` : "";
    return `<span class="value">${escapeHtml(text)}</span>${width}`;
  }
  const members = Object.entries(value)
    .map(([k, v]) => `<li><span class="name">${escapeHtml(k)}</span> ${renderValue(v)}</li>`)
    .join("");
  return `<details class="bundle" open><summary>bundle</summary><ul>${members}</ul></details>`;
}

export function renderVariables(state: SessionView): string {
  const frame = selectedFrame(state);
  if (!frame) {
    return `<div class="variables empty">no frame</div>`;
  }
  const section = (title: string, vars: [string, WireValue][]) => {
    const rows = vars
      .map(([name, v]) => `<li data-var="${escapeHtml(name)}"><span class="name">${escapeHtml(name)}</span> ${renderValue(v)}</li>`)
      .join("");
    return `<details open><summary>${title}</summary><ul>${rows}</ul></details>`;
  };
  return (
    `<div class="variables" data-thread="${escapeHtml(frame.thread)}">` +
    section("locals", frame.locals) +
    section("instance variables", frame.instance_vars) +
    `</div>`
  );
}

export function renderControls(state: SessionView): string {
  const stopped = state.stop !== null && !state.running;
  const reverseCapable = state.capabilities?.can_set_time === true;
  const button = (action: string, label: string, enabled: boolean) =>
    `<button data-action="${action}"${enabled ? "" : " disabled"}>${label}</button>`;
  const canResume = stopped && !state.resumePending && !state.ended;
  return (
    `<div class="controls">` +
    button("continue", "continue", canResume) +
    button("step-over", "step over", canResume) +
    button("reverse-continue", "reverse", canResume && reverseCapable) +
    button("reverse-step", "reverse step", canResume && reverseCapable) +
    button("pause", "pause", state.running) +
    `<span class="time">t=${state.time}</span>` +
    (state.ended ? `<span class="ended">ended</span>` : "") +
    `</div>`
  );
}

export function renderConsole(state: SessionView): string {
  const rows = state.console
    .map(
      (entry) =>
        `<div class="entry"><code>${escapeHtml(entry.expr)}</code> = ` +
        `<span class="result">${escapeHtml(entry.result)}</span></div>`,
    )
    .join("");
  return `<div class="console">${rows}</div>`;
}

export function renderToasts(state: SessionView): string {
  const rows = state.toasts
    .map((t) => `<div class="toast">${escapeHtml(t)}</div>`)
    .join("");
  return `<div class="toasts">${rows}</div>`;
}

export function renderApp(state: SessionView, file: string): string {
  return (
    renderControls(state) +
    renderSource(state, file) +
    renderThreads(state) +
    renderVariables(state) +
    renderConsole(state) +
    renderToasts(state)
  );
}
