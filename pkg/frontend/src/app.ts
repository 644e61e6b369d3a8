/**
 * DOM glue for the operator console. All state lives in the models
 * (GateInbox, ProgressModel); this file only renders them and relays form
 * submissions. Closing the tab never changes engine behavior.
 */

import { ApiClient, ApiError, ConsoleSettings } from "./api.js";
import { buildDecision, FormState } from "./decision.js";
import { GateInbox } from "./inbox.js";
import { ProgressModel } from "./progress.js";
import type { GateTicket, Pocket, SessionDescriptor } from "./types.js";
import { parseCoordinateText } from "./validate.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: Array<Node | string>
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  node.append(...children);
  return node;
}

export class ConsoleApp {
  private api: ApiClient;
  private inbox?: GateInbox;
  private progress = new ProgressModel();
  private session?: SessionDescriptor;
  private stopStream?: () => void;
  private banner: HTMLElement;
  private root: HTMLElement;

  constructor(settings: ConsoleSettings, root: HTMLElement) {
    this.api = new ApiClient(settings);
    this.root = root;
    this.banner = el("div", { class: "banner hidden" });
    root.append(this.banner);
  }

  async openSession(sessionId: string): Promise<void> {
    this.stopStream?.();
    this.session = await this.api.getSession(sessionId);
    this.progress = new ProgressModel();
    this.progress.applyAll(await this.api.pollEvents(sessionId, 0));
    this.inbox = new GateInbox(this.api, sessionId);
    this.inbox.onChange(() => this.render());
    await this.inbox.connect();
    this.stopStream = this.api.streamEvents(
      sessionId,
      this.progress.lastSeq,
      (event) => {
        this.progress.apply(event);
        this.render();
      },
      () => this.showBanner("connection lost — reconnecting"),
    );
    this.render();
  }

  private showBanner(message: string): void {
    this.banner.textContent = message;
    this.banner.classList.remove("hidden");
  }

  private async submit(ticket: GateTicket, form: FormState): Promise<void> {
    const { decision, issues } = buildDecision(ticket, form);
    if (!decision) {
      this.showBanner(issues.map((i) => `${i.field}: ${i.message}`).join("; "));
      return;
    }
    try {
      await this.inbox?.decide(ticket.ticket_id, decision);
      this.banner.classList.add("hidden");
    } catch (error) {
      // server rejection renders inline; edits stay in the form
      if (error instanceof ApiError) {
        this.showBanner(`rejected by service: ${JSON.stringify(error.body)}`);
      } else {
        this.showBanner(String(error));
      }
    }
  }

  private renderTicket(ticket: GateTicket): HTMLElement {
    const card = el("div", { class: "ticket", "data-ticket": ticket.ticket_id });
    card.append(
      el("h3", {}, `${ticket.gate_id} — ${ticket.node_id}`),
      el("p", { class: "rationale" }, ticket.rationale),
    );

    for (const [key, value] of Object.entries(ticket.proposed)) {
      const editable = ticket.editable.includes(key);
      card.append(this.renderValue(key, value, editable));
    }

    const approve = el("button", { class: "approve" }, "Approve");
    approve.onclick = () => void this.submit(ticket, { kind: "approve" });

    const reason = el("input", { placeholder: "reason" }) as HTMLInputElement;
    const reject = el("button", { class: "reject" }, "Reject");
    reject.onclick = () =>
      void this.submit(ticket, { kind: "reject", reason: reason.value });

    const correct = el("button", { class: "correct" }, "Submit correction");
    correct.onclick = () => {
      const patch = this.collectPatch(card, ticket);
      if (patch) void this.submit(ticket, { kind: "correct", patch });
    };

    const checkpointSelect = el("select") as HTMLSelectElement;
    for (const checkpoint of this.progress.checkpoints) {
      checkpointSelect.append(
        el("option", { value: checkpoint.id }, `${checkpoint.label} (${checkpoint.id})`));
    }
    const rollback = el("button", { class: "rollback" }, "Roll back");
    rollback.onclick = () =>
      void this.submit(ticket, { kind: "rollback", checkpointId: checkpointSelect.value });

    card.append(el("div", { class: "actions" },
      approve, reject, reason, correct, checkpointSelect, rollback));
    return card;
  }

  private renderValue(key: string, value: unknown, editable: boolean): HTMLElement {
    const wrap = el("div", { class: editable ? "field editable" : "field" });
    wrap.append(el("label", {}, key));
    if (key === "pocket" && typeof value === "object" && value !== null) {
      const pocket = value as Pocket;
      wrap.append(
        el("input", { "data-field": `${key}.center`, value: pocket.center.join(", ") }),
        el("input", { "data-field": `${key}.box`, value: pocket.box.join(", ") }),
        el("select", { "data-field": `${key}.source` },
          el("option", { value: "predicted" }, "predicted"),
          el("option", { value: "reference_ligand" }, "reference ligand")),
      );
    } else if (Array.isArray(value)) {
      const table = el("table", { class: "candidates" });
      const rows = value as Array<Record<string, unknown>>;
      const keys = rows.length ? Object.keys(rows[0]).slice(0, 5) : [];
      table.append(el("tr", {}, ...keys.map((k) => el("th", {}, k))));
      for (const row of rows.slice(0, 25)) {
        table.append(el("tr", {},
          ...keys.map((k) => el("td", {}, String(row[k] ?? "")))));
      }
      wrap.append(table);
    } else if (editable) {
      wrap.append(el("input", { "data-field": key, value: String(value) }));
    } else {
      wrap.append(el("span", {}, JSON.stringify(value)));
    }
    return wrap;
  }

  private collectPatch(
    card: HTMLElement,
    ticket: GateTicket,
  ): Record<string, unknown> | undefined {
    const patch: Record<string, unknown> = {};
    if (ticket.editable.includes("pocket")) {
      const centerInput = card.querySelector<HTMLInputElement>('[data-field="pocket.center"]');
      const boxInput = card.querySelector<HTMLInputElement>('[data-field="pocket.box"]');
      const sourceInput = card.querySelector<HTMLSelectElement>('[data-field="pocket.source"]');
      if (centerInput && boxInput && sourceInput) {
        const center = parseCoordinateText(centerInput.value, "pocket.center");
        const box = parseCoordinateText(boxInput.value, "pocket.box");
        if (center.issues.length || box.issues.length) {
          this.showBanner([...center.issues, ...box.issues]
            .map((i) => `${i.field}: ${i.message}`).join("; "));
          return undefined;   // no request leaves the client
        }
        const proposed = ticket.proposed["pocket"] as Pocket;
        patch["pocket"] = {
          ...proposed,
          center: center.value,
          box: box.value,
          source: sourceInput.value,
        };
      }
    }
    for (const key of ticket.editable) {
      if (key === "pocket") continue;
      const input = card.querySelector<HTMLInputElement>(`[data-field="${key}"]`);
      if (input && input.value !== String(ticket.proposed[key])) {
        const numeric = Number(input.value);
        patch[key] = Number.isFinite(numeric) && input.value.trim() !== ""
          ? numeric : input.value;
      }
    }
    return patch;
  }

  render(): void {
    const previous = this.root.querySelector(".console-body");
    previous?.remove();
    const body = el("div", { class: "console-body" });
    if (this.session) {
      body.append(el("h2", {}, `${this.session.session_id} — ${this.session.query}`));
      body.append(el("p", { class: "status" },
        `status: ${this.progress.sessionStatus}`));
    }
    const inboxView = el("div", { class: "inbox" }, el("h2", {}, "Pending gates"));
    for (const ticket of this.inbox?.pending() ?? []) {
      inboxView.append(this.renderTicket(ticket));
    }
    const historyView = el("div", { class: "history" }, el("h2", {}, "Resolved"));
    for (const ticket of this.inbox?.history() ?? []) {
      historyView.append(el("div", { class: `resolved ${ticket.status}` },
        `${ticket.gate_id}: ${ticket.status} by ${ticket.decided_by}`));
    }
    const progressView = el("div", { class: "progress" }, el("h2", {}, "Pipeline"));
    for (const node of this.progress.nodes.values()) {
      progressView.append(el("span", { class: `node ${node.state}` },
        `${node.graph}/${node.nodeId}`));
    }
    body.append(inboxView, historyView, progressView);
    this.root.append(body);
  }
}

declare global {
  interface Window {
    DualplaneConsole: typeof ConsoleApp;
  }
}

if (typeof window !== "undefined") {
  window.DualplaneConsole = ConsoleApp;
}
