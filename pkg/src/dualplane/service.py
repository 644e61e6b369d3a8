"""Session service: sessions, gates, lineage and event streams over HTTP.

A deliberately small stdlib server. Reads are open; every mutation requires
the shared token. Each session runs in its own thread with blocking
interactive gates, so a console decision resumes the run in place, and every
decision is recorded verbatim in the trajectory (the service adds no hidden
state).
"""

from __future__ import annotations

import json
import logging
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, urlparse

from .cli import default_reasoner
from .engine import GatePolicy, resolve_gate
from .errors import (DualPlaneError, IllegalPatchKey, TicketAlreadyResolved,
                     UnknownCheckpoint, UnknownTicket)
from .session import SessionConfig, SessionStores, create_session
from .supervisor import run_supervisor
from .types import PermissionPolicy

logger = logging.getLogger(__name__)

AUTH_HEADER = "x-auth-token"


class SessionService:
    def __init__(self, host: str = "127.0.0.1", port: int = 8350,
                 token: str = "local-dev-token", seed: int = 0,
                 mode: str = "strict", out_dir: Path | None = None):
        self.host = host
        self.port = port
        self.token = token
        self.seed = seed
        self.mode = mode
        self.out_dir = out_dir
        self.sessions: dict[str, SessionStores] = {}
        self.threads: dict[str, threading.Thread] = {}
        self._lock = threading.Lock()
        handler = _make_handler(self)
        self.httpd = ThreadingHTTPServer((host, port), handler)
        self.port = self.httpd.server_address[1]

    # -- session management --------------------------------------------------

    def start_session(self, query: str, seed: int | None = None,
                      gate_mode: str = "interactive") -> SessionStores:
        if gate_mode == "auto-approve":
            gate_policy = GatePolicy.auto()
        else:
            gate_policy = GatePolicy.interactive(block=True)
        config = SessionConfig(
            seed=self.seed if seed is None else seed,
            policy=PermissionPolicy.make(self.mode),
            gate_policy=gate_policy,
            out_dir=self.out_dir,
        )
        stores = create_session(query, config, reasoner=default_reasoner())
        with self._lock:
            self.sessions[stores.session_id] = stores

        def run() -> None:
            try:
                run_supervisor(query, stores)
            except DualPlaneError as exc:
                stores.status = "failed"
                stores.report["error"] = {"class": exc.code, "detail": str(exc)}
            finally:
                stores.save()

        thread = threading.Thread(target=run, name=f"session-{stores.session_id}",
                                  daemon=True)
        self.threads[stores.session_id] = thread
        thread.start()
        return stores

    def get(self, session_id: str) -> SessionStores | None:
        return self.sessions.get(session_id)

    def find_ticket(self, ticket_id: str):
        for stores in self.sessions.values():
            if ticket_id in stores.gatebook.tickets:
                return stores
        return None

    def find_artifact(self, artifact_id: str):
        for stores in self.sessions.values():
            if stores.ledger.has(artifact_id):
                return stores
        return None

    # -- lifecycle ---------------------------------------------------------

    def serve_forever(self) -> None:
        self.httpd.serve_forever(poll_interval=0.1)

    def shutdown(self) -> None:
        self.httpd.shutdown()
        self.httpd.server_close()

    def start_background(self) -> threading.Thread:
        thread = threading.Thread(target=self.serve_forever, daemon=True)
        thread.start()
        return thread


def _make_handler(service: SessionService):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, fmt, *args):   # quiet by default
            logger.debug("service: " + fmt, *args)

        # -- helpers -----------------------------------------------------

        def _send_json(self, status: int, payload) -> None:
            body = json.dumps(payload, sort_keys=True).encode("utf-8")
            self.send_response(status)
            self.send_header("content-type", "application/json")
            self.send_header("content-length", str(len(body)))
            self.send_header("access-control-allow-origin", "*")
            self.end_headers()
            self.wfile.write(body)

        def _authorized(self) -> bool:
            return self.headers.get(AUTH_HEADER, "") == service.token

        def _read_body(self) -> dict:
            length = int(self.headers.get("content-length", 0))
            if length == 0:
                return {}
            return json.loads(self.rfile.read(length).decode("utf-8"))

        # -- routes -----------------------------------------------------

        def do_OPTIONS(self):
            self.send_response(204)
            self.send_header("access-control-allow-origin", "*")
            self.send_header("access-control-allow-headers", f"content-type, {AUTH_HEADER}")
            self.send_header("access-control-allow-methods", "GET, POST, OPTIONS")
            self.send_header("content-length", "0")
            self.end_headers()

        def do_GET(self):
            url = urlparse(self.path)
            parts = [p for p in url.path.split("/") if p]
            try:
                if parts == ["sessions"]:
                    self._send_json(200, [s.descriptor()
                                          for s in service.sessions.values()])
                elif len(parts) == 2 and parts[0] == "sessions":
                    stores = service.get(parts[1])
                    if stores is None:
                        self._send_json(404, {"error": "unknown_session"})
                        return
                    payload = stores.descriptor()
                    payload["report"] = stores.report
                    self._send_json(200, payload)
                elif len(parts) == 3 and parts[0] == "sessions" and parts[2] == "gates":
                    stores = service.get(parts[1])
                    if stores is None:
                        self._send_json(404, {"error": "unknown_session"})
                        return
                    self._send_json(200, [t.to_json() for t in stores.gatebook.all()])
                elif len(parts) == 3 and parts[0] == "sessions" and parts[2] == "events":
                    self._stream_events(parts[1], url)
                elif len(parts) == 3 and parts[0] == "artifacts" and parts[2] == "lineage":
                    stores = service.find_artifact(parts[1])
                    if stores is None:
                        self._send_json(404, {"error": "unknown_artifact"})
                        return
                    chain = stores.ledger.lineage(parts[1])
                    self._send_json(200, [r.to_json() for r in chain])
                else:
                    self._send_json(404, {"error": "unknown_route"})
            except (BrokenPipeError, ConnectionResetError):
                pass
            except DualPlaneError as exc:
                self._send_json(400, {"error": exc.code, "detail": str(exc)})

        def do_POST(self):
            url = urlparse(self.path)
            parts = [p for p in url.path.split("/") if p]
            try:
                # drain the body before any response so keep-alive
                # connections stay framed correctly
                body = self._read_body()
                if not self._authorized():
                    self._send_json(401, {"error": "unauthorized"})
                    return
                if parts == ["sessions"]:
                    stores = service.start_session(
                        body["query"], seed=body.get("seed"),
                        gate_mode=body.get("gate_mode", "interactive"))
                    self._send_json(201, stores.descriptor())
                elif len(parts) == 3 and parts[0] == "gates" and parts[2] == "decision":
                    self._decide(parts[1], body)
                else:
                    self._send_json(404, {"error": "unknown_route"})
            except (BrokenPipeError, ConnectionResetError):
                pass
            except DualPlaneError as exc:
                self._send_json(400, {"error": exc.code, "detail": str(exc)})
            except (ValueError, KeyError) as exc:
                self._send_json(400, {"error": "bad_request", "detail": str(exc)})

        def _decide(self, ticket_id: str, decision: dict) -> None:
            stores = service.find_ticket(ticket_id)
            if stores is None:
                self._send_json(404, {"error": "unknown_ticket"})
                return
            try:
                resolve_gate(ticket_id, decision, stores.gatebook,
                             decided_by=decision.get("decided_by", "console"))
            except UnknownTicket:
                self._send_json(404, {"error": "unknown_ticket"})
                return
            except TicketAlreadyResolved:
                self._send_json(409, {"error": "ticket_already_resolved"})
                return
            except IllegalPatchKey as exc:
                self._send_json(400, {"error": "illegal_patch_key", "detail": str(exc)})
                return
            except UnknownCheckpoint as exc:
                self._send_json(400, {"error": "unknown_checkpoint", "detail": str(exc)})
                return
            ticket = stores.gatebook.get(ticket_id)
            self._send_json(200, ticket.to_json())

        def _stream_events(self, session_id: str, url) -> None:
            stores = service.get(session_id)
            if stores is None:
                self._send_json(404, {"error": "unknown_session"})
                return
            query = parse_qs(url.query)
            after = int(query.get("after", ["0"])[0])
            accept = self.headers.get("accept", "")
            if "text/event-stream" not in accept:
                events = [e.to_json() for e in stores.events.since(after)]
                self._send_json(200, events)
                return
            self.send_response(200)
            self.send_header("content-type", "text/event-stream")
            self.send_header("cache-control", "no-cache")
            self.send_header("access-control-allow-origin", "*")
            self.end_headers()
            sub = stores.events.subscribe(after)
            try:
                idle_rounds = 0
                while idle_rounds < 600:    # ~60 s idle cutoff
                    batch = sub.poll()
                    if batch:
                        idle_rounds = 0
                        for event in batch:
                            data = json.dumps(event, sort_keys=True)
                            self.wfile.write(
                                f"id: {event['seq']}\nevent: {event['kind']}\n"
                                f"data: {data}\n\n".encode("utf-8"))
                        self.wfile.flush()
                    else:
                        idle_rounds += 1
                        with stores.events.changed:
                            stores.events.changed.wait(timeout=0.1)
            except (BrokenPipeError, ConnectionResetError):
                pass
            finally:
                sub.close()

    return Handler
