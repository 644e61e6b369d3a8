/**
 * Gate inbox: the live model behind the pending list and decision history.
 *
 * Event-driven: every `ticket_raised` / `ticket_resolved` push triggers a
 * gates refetch, so the inbox reflects reality within one event push and a
 * second tab can never double-submit (the pending check rides on server
 * state, and the service answers 409 on a repeat anyway).
 */

import type { ApiClient } from "./api.js";
import type { Decision, EngineEvent, GateTicket } from "./types.js";

export type InboxListener = (inbox: GateInbox) => void;

export class GateInbox {
  private tickets = new Map<string, GateTicket>();
  private listeners: InboxListener[] = [];
  private stopStream?: () => void;
  private pollTimer?: ReturnType<typeof setInterval>;
  private lastSeq = 0;
  public connectionLost = false;

  constructor(
    private readonly api: ApiClient,
    private readonly sessionId: string,
  ) {}

  pending(): GateTicket[] {
    return [...this.tickets.values()].filter((t) => t.status === "pending");
  }

  history(): GateTicket[] {
    return [...this.tickets.values()].filter((t) => t.status !== "pending");
  }

  get(ticketId: string): GateTicket | undefined {
    return this.tickets.get(ticketId);
  }

  onChange(listener: InboxListener): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener(this);
  }

  async refresh(): Promise<void> {
    const gates = await this.api.listGates(this.sessionId);
    this.tickets.clear();
    for (const ticket of gates) this.tickets.set(ticket.ticket_id, ticket);
    this.notify();
  }

  private async handleEvent(event: EngineEvent): Promise<void> {
    this.lastSeq = Math.max(this.lastSeq, event.seq);
    if (event.kind === "gap") {
      // dropped history: resynchronize from server state
      await this.refresh();
      return;
    }
    if (event.kind === "ticket_raised" || event.kind === "ticket_resolved") {
      await this.refresh();
    }
  }

  /** Live mode: SSE stream plus an initial fetch. */
  async connect(): Promise<void> {
    await this.refresh();
    this.stopStream = this.api.streamEvents(
      this.sessionId,
      this.lastSeq,
      (event) => void this.handleEvent(event),
      () => {
        this.connectionLost = true;
        this.notify();
      },
    );
  }

  /** Poll mode: JSON event polling at a fixed cadence (also the reconnect path). */
  async connectPolling(intervalMs = 100): Promise<void> {
    await this.refresh();
    this.pollTimer = setInterval(async () => {
      try {
        const events = await this.api.pollEvents(this.sessionId, this.lastSeq);
        this.connectionLost = false;
        for (const event of events) await this.handleEvent(event);
      } catch {
        this.connectionLost = true;
        this.notify();
      }
    }, intervalMs);
  }

  disconnect(): void {
    this.stopStream?.();
    if (this.pollTimer !== undefined) clearInterval(this.pollTimer);
  }

  /**
   * Submit exactly one decision for a pending ticket. No optimistic UI: the
   * inbox only changes after the server confirms.
   */
  async decide(ticketId: string, decision: Decision): Promise<GateTicket> {
    const ticket = this.tickets.get(ticketId);
    if (!ticket) throw new Error(`unknown ticket ${ticketId}`);
    if (ticket.status !== "pending") {
      throw new Error(`ticket ${ticketId} already resolved (${ticket.status})`);
    }
    const resolved = await this.api.submitDecision(ticketId, decision);
    this.tickets.set(resolved.ticket_id, resolved);
    this.notify();
    return resolved;
  }
}
