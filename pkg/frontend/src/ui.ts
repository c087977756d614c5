/** DOM rendering. The whole view is re-rendered from ViewState on change. */

import { confirmEnabled, reviseEnabled, type ViewState } from "./state.js";

export interface Handlers {
  onSend(text: string): void;
  onConfirm(): void;
  onRevise(key: string, text: string): void;
  onRetry(): void;
  onAdminRefresh(token: string): void;
  onAdminFlush(token: string): void;
}

const SLOT_KEYS = ["entity", "quantifier", "location", "time", "condition"];

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [name, value] of Object.entries(attrs)) {
    node.setAttribute(name, value);
  }
  if (text !== undefined) node.textContent = text;
  return node;
}

function renderErrorBanner(state: ViewState, handlers: Handlers): HTMLElement | null {
  if (state.error === null) return null;
  const banner = el("div", { class: "banner error", "data-testid": "error-banner" });
  banner.appendChild(el("span", {}, state.error));
  const retry = el("button", { "data-testid": "retry" }, "Retry");
  retry.addEventListener("click", () => handlers.onRetry());
  banner.appendChild(retry);
  return banner;
}

function renderTranscript(state: ViewState): HTMLElement {
  const list = el("ul", { class: "transcript", "data-testid": "transcript" });
  for (const entry of state.transcript) {
    const cls = entry.rejection ? `${entry.role} rejection` : entry.role;
    list.appendChild(el("li", { class: cls }, entry.text));
  }
  return list;
}

function renderSlotTable(state: ViewState): HTMLElement {
  const table = el("table", { class: "slots", "data-testid": "slot-table" });
  const head = el("tr");
  for (const label of ["key", "text", "status"]) {
    head.appendChild(el("th", {}, label));
  }
  table.appendChild(head);
  for (const row of state.slots) {
    const tr = el("tr", { "data-key": row.key, class: row.status });
    tr.appendChild(el("td", {}, row.key));
    tr.appendChild(el("td", {}, row.text));
    tr.appendChild(el("td", {}, row.status));
    table.appendChild(tr);
  }
  return table;
}

function renderPreview(state: ViewState): HTMLElement {
  const pane = el("section", { class: "preview", "data-testid": "preview" });
  pane.appendChild(el("h2", {}, "Requirement preview"));
  pane.appendChild(
    el("p", { "data-testid": "template" }, state.template ?? "(no sentence yet)"),
  );
  pane.appendChild(
    el("pre", { "data-testid": "formula" }, state.formula ?? "(no formula yet)"),
  );
  pane.appendChild(renderSlotTable(state));
  return pane;
}

function renderComposer(state: ViewState, handlers: Handlers): HTMLElement {
  const form = el("form", { class: "composer", "data-testid": "composer" });
  if (state.outstandingQuery !== null) {
    form.appendChild(
      el("p", { class: "query", "data-testid": "outstanding-query" },
        state.outstandingQuery),
    );
  }
  const input = el("input", {
    type: "text",
    "data-testid": "message-input",
    placeholder:
      state.transcript.length === 0
        ? "Type a requirement…"
        : "Type your answer…",
  });
  const send = el("button", { type: "submit", "data-testid": "send" }, "Send");
  if (state.sessionState === "done") {
    input.disabled = true;
    send.disabled = true;
  }
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const text = input.value.trim();
    if (text) handlers.onSend(text);
    input.value = "";
  });
  form.appendChild(input);
  form.appendChild(send);
  return form;
}

function renderConfirmControls(state: ViewState, handlers: Handlers): HTMLElement {
  const pane = el("section", { class: "confirm", "data-testid": "confirm-pane" });
  const confirm = el("button", { "data-testid": "confirm" }, "Confirm");
  confirm.disabled = !confirmEnabled(state);
  confirm.addEventListener("click", () => handlers.onConfirm());
  pane.appendChild(confirm);

  const revise = el("form", { class: "revise", "data-testid": "revise-form" });
  const select = el("select", { "data-testid": "revise-key" });
  for (const key of SLOT_KEYS) {
    select.appendChild(el("option", { value: key }, key));
  }
  const value = el("input", {
    type: "text",
    "data-testid": "revise-text",
    placeholder: "New value…",
  });
  const submit = el("button", { type: "submit", "data-testid": "revise" }, "Revise");
  if (!reviseEnabled(state)) {
    select.disabled = true;
    value.disabled = true;
    submit.disabled = true;
  }
  revise.addEventListener("submit", (event) => {
    event.preventDefault();
    const text = value.value.trim();
    if (text) handlers.onRevise(select.value, text);
    value.value = "";
  });
  revise.appendChild(select);
  revise.appendChild(value);
  revise.appendChild(submit);
  pane.appendChild(revise);
  return pane;
}

function renderDoneCard(state: ViewState): HTMLElement | null {
  if (state.sessionState !== "done") return null;
  const card = el("section", { class: "done-card", "data-testid": "done-card" });
  card.appendChild(el("h2", {}, "Requirement recorded"));
  for (const formula of state.outputs) {
    card.appendChild(el("pre", {}, formula));
  }
  return card;
}

function renderAdmin(state: ViewState, handlers: Handlers): HTMLElement {
  const pane = el("section", { class: "admin", "data-testid": "admin-pane" });
  pane.appendChild(el("h2", {}, "Admin"));
  pane.appendChild(
    el("p", { "data-testid": "model-version" },
      state.admin.modelVersion === null
        ? "model version: unknown"
        : `model version: ${state.admin.modelVersion}`),
  );
  if (state.admin.lastFlush !== null) {
    const { accepted, rejected } = state.admin.lastFlush;
    pane.appendChild(
      el("p", { "data-testid": "flush-result" },
        `last retrain: ${accepted} accepted, ${rejected} rejected`),
    );
  }
  const token = el("input", {
    type: "password",
    "data-testid": "admin-token",
    placeholder: "Admin token",
  });
  const refresh = el("button", { "data-testid": "shield-log-refresh" }, "Shield log");
  refresh.addEventListener("click", () => handlers.onAdminRefresh(token.value));
  const flush = el("button", { "data-testid": "flush-retrain" }, "Flush & retrain");
  flush.addEventListener("click", () => handlers.onAdminFlush(token.value));
  pane.appendChild(token);
  pane.appendChild(refresh);
  pane.appendChild(flush);

  const log = el("table", { class: "shield-log", "data-testid": "shield-log" });
  const head = el("tr");
  for (const label of ["time", "sha256", "verdict", "filters"]) {
    head.appendChild(el("th", {}, label));
  }
  log.appendChild(head);
  for (const entry of state.admin.shieldLog) {
    const tr = el("tr", { class: entry.malicious ? "malicious" : "benign" });
    tr.appendChild(el("td", {}, new Date(entry.ts * 1000).toISOString()));
    tr.appendChild(el("td", {}, entry.phrase_sha256.slice(0, 12)));
    tr.appendChild(el("td", {}, entry.malicious ? "malicious" : "benign"));
    const filters = [
      entry.literal_triggered ? "literal" : null,
      entry.inferential_triggered ? "inferential" : null,
    ].filter((name) => name !== null);
    tr.appendChild(el("td", {}, filters.join(", ") || "—"));
    log.appendChild(tr);
  }
  pane.appendChild(log);
  return pane;
}

export function render(root: HTMLElement, state: ViewState, handlers: Handlers): void {
  root.textContent = "";
  const banner = renderErrorBanner(state, handlers);
  if (banner !== null) root.appendChild(banner);
  const main = el("main");
  const chat = el("section", { class: "chat" });
  chat.appendChild(renderTranscript(state));
  const done = renderDoneCard(state);
  if (done !== null) chat.appendChild(done);
  chat.appendChild(renderComposer(state, handlers));
  chat.appendChild(renderConfirmControls(state, handlers));
  main.appendChild(chat);
  main.appendChild(renderPreview(state));
  main.appendChild(renderAdmin(state, handlers));
  root.appendChild(main);
}
