"""Per-session event log with bounded subscriber queues.

Execution emits ordered events (node lifecycle, tickets, checkpoints,
contained failures); the service streams them to consoles. A slow
subscriber never blocks execution: its queue drops oldest entries and a gap
marker tells the consumer to resynchronize.
"""

from __future__ import annotations

import threading
from collections import deque
from dataclasses import dataclass, field

SUBSCRIBER_QUEUE_MAX = 256


@dataclass
class Event:
    seq: int
    kind: str
    data: dict

    def to_json(self) -> dict:
        return {"seq": self.seq, "kind": self.kind, "data": self.data}


class Subscription:
    """Bounded view over the bus; ``gap`` events mark dropped history."""

    def __init__(self, bus: "EventBus", after_seq: int = 0):
        self.bus = bus
        self.queue: deque[Event] = deque(maxlen=SUBSCRIBER_QUEUE_MAX)
        self.gapped = False
        self._lock = threading.Lock()
        with bus._lock:
            for event in bus.events:
                if event.seq > after_seq:
                    self._push(event)
            bus._subscribers.append(self)

    def _push(self, event: Event) -> None:
        with self._lock:
            if len(self.queue) == self.queue.maxlen:
                self.gapped = True
            self.queue.append(event)

    def poll(self) -> list[dict]:
        with self._lock:
            out: list[dict] = []
            if self.gapped:
                out.append({"seq": self.queue[0].seq - 1 if self.queue else 0,
                            "kind": "gap", "data": {}})
                self.gapped = False
            out.extend(e.to_json() for e in self.queue)
            self.queue.clear()
            return out

    def close(self) -> None:
        with self.bus._lock:
            if self in self.bus._subscribers:
                self.bus._subscribers.remove(self)


class EventBus:
    def __init__(self, session_id: str):
        self.session_id = session_id
        self.events: list[Event] = []
        self._seq = 0
        self._lock = threading.Lock()
        self._subscribers: list[Subscription] = []
        self.changed = threading.Condition()

    def emit(self, kind: str, data: dict | None = None) -> Event:
        with self._lock:
            self._seq += 1
            event = Event(seq=self._seq, kind=kind, data=dict(data or {}))
            self.events.append(event)
            subscribers = list(self._subscribers)
        for sub in subscribers:
            sub._push(event)
        with self.changed:
            self.changed.notify_all()
        return event

    def since(self, after_seq: int) -> list[Event]:
        with self._lock:
            return [e for e in self.events if e.seq > after_seq]

    def subscribe(self, after_seq: int = 0) -> Subscription:
        return Subscription(self, after_seq)

    @property
    def last_seq(self) -> int:
        return self._seq
