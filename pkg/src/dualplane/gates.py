"""Gate tickets: paused decision points and their resolution bookkeeping.

A ticket is raised when a gate node activates, carries the rationale and the
proposed values, and takes exactly one terminal decision (approve, reject,
correct, rollback). The gate book is the session-wide index the service and
console read.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from typing import Any

from .errors import IllegalPatchKey, TicketAlreadyResolved, UnknownTicket

DECISIONS = ("approve", "reject", "correct", "rollback")


@dataclass
class GateTicket:
    ticket_id: str
    session: str
    gate_id: str
    node_id: str
    rationale: str
    proposed: dict
    editable: tuple[str, ...]
    checkpoint_id: str = ""
    status: str = "pending"   # pending | approved | rejected | corrected | rolled_back
    decision: dict = field(default_factory=dict)
    decided_by: str = ""
    decided_at: int = 0

    @property
    def pending(self) -> bool:
        return self.status == "pending"

    def to_json(self) -> dict:
        return {
            "ticket_id": self.ticket_id,
            "session": self.session,
            "gate_id": self.gate_id,
            "node_id": self.node_id,
            "rationale": self.rationale,
            "proposed": self.proposed,
            "editable": list(self.editable),
            "checkpoint_id": self.checkpoint_id,
            "status": self.status,
            "decision": self.decision,
            "decided_by": self.decided_by,
            "decided_at": self.decided_at,
        }


_DECISION_KEYS = ("decision", "reason", "patch", "checkpoint_id", "checkpoint_label")


def normalize_decision(decision: dict | str) -> dict:
    """Accept 'approve' shorthand or a full decision payload and validate shape.

    Only semantic keys survive, so the same decision digests identically
    whether it arrived from a script, the console, or auto-approval."""
    if isinstance(decision, str):
        decision = {"decision": decision}
    kind = decision.get("decision")
    if kind not in DECISIONS:
        raise ValueError(f"unknown gate decision {kind!r}")
    return {k: decision[k] for k in _DECISION_KEYS if k in decision}


def check_patch(ticket: GateTicket, patch: dict) -> None:
    """Patches may only touch editable keys; the ticket stays pending on refusal."""
    for key in patch:
        if key not in ticket.editable:
            raise IllegalPatchKey(f"key {key!r} is not editable on gate {ticket.gate_id}")


def mark_resolved(ticket: GateTicket, status: str, decision: dict,
                  decided_by: str, logical_time: int) -> None:
    if ticket.status != "pending":
        raise TicketAlreadyResolved(ticket.ticket_id)
    ticket.status = status
    ticket.decision = dict(decision)
    ticket.decided_by = decided_by
    ticket.decided_at = logical_time


@dataclass
class GateBook:
    """Session index of tickets plus the condition used by blocking waiters."""

    tickets: dict[str, GateTicket] = field(default_factory=dict)
    order: list[str] = field(default_factory=list)
    runs: dict[str, Any] = field(default_factory=dict)   # ticket_id -> GraphRun
    condition: threading.Condition = field(default_factory=threading.Condition)

    def add(self, ticket: GateTicket, run: Any = None) -> None:
        with self.condition:
            self.tickets[ticket.ticket_id] = ticket
            self.order.append(ticket.ticket_id)
            if run is not None:
                self.runs[ticket.ticket_id] = run
            self.condition.notify_all()

    def get(self, ticket_id: str) -> GateTicket:
        ticket = self.tickets.get(ticket_id)
        if ticket is None:
            raise UnknownTicket(ticket_id)
        return ticket

    def pending(self) -> list[GateTicket]:
        return [self.tickets[t] for t in self.order if self.tickets[t].pending]

    def all(self) -> list[GateTicket]:
        return [self.tickets[t] for t in self.order]

    def run_for(self, ticket_id: str) -> Any:
        return self.runs.get(ticket_id)

    def notify(self) -> None:
        with self.condition:
            self.condition.notify_all()
