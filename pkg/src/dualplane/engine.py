"""Skill-graph executor: contracts, gates, checkpoints, bounded cycles,
failure containment.

Scheduling is single-threaded and deterministic (ready nodes run in
topological order); fanout branches are logically concurrent and a suspended
gate never blocks sibling branches, because everything runnable executes
before the run settles into suspension. All mutable run state is
serializable so checkpoints capture it exactly.
"""

from __future__ import annotations

import logging
import threading
import time
from dataclasses import dataclass, field
from typing import Any, Callable

from .adapters import ContractEntry, adapt_format
from .errors import (AdapterError, DualPlaneError, IllegalPatchKey,
                     PermissionDenied, RunAborted, TicketAlreadyResolved,
                     ToolError, UnknownCheckpoint, UnknownTicket)
from .fabric import EpisodeLog, InvocationBudget, ToolFabric, result_from_error
from .gates import GateBook, GateTicket, check_patch, mark_resolved, normalize_decision
from .graphspec import NodeSpec, SkillGraph
from .params import validate_params
from .types import Action, AgentRole, Digest, PermissionPolicy, digest_json

logger = logging.getLogger(__name__)


@dataclass
class FailureRecord:
    node_id: str
    item_ref: str
    error_kind: str
    penalty_applied: bool = False

    def to_json(self) -> dict:
        return {"node_id": self.node_id, "item_ref": self.item_ref,
                "error_kind": self.error_kind, "penalty_applied": self.penalty_applied}


@dataclass
class Checkpoint:
    checkpoint_id: str
    session: str
    node_id: str
    label: str
    created_at: int
    artifact_digest: Digest
    graph_digest: Digest
    state: dict

    @property
    def snapshot_digest(self) -> Digest:
        return digest_json({"artifacts": self.artifact_digest, "graph": self.graph_digest})

    def to_json(self) -> dict:
        return {
            "checkpoint_id": self.checkpoint_id, "session": self.session,
            "node_id": self.node_id, "label": self.label,
            "created_at": self.created_at, "artifact_digest": self.artifact_digest,
            "graph_digest": self.graph_digest, "state": self.state,
        }


@dataclass
class GatePolicy:
    mode: str = "auto_approve"   # auto_approve | scripted | interactive
    script: dict[str, list[dict]] = field(default_factory=dict)
    block_until_resolved: bool = False
    decided_by: str = ""

    @classmethod
    def auto(cls) -> "GatePolicy":
        return cls(mode="auto_approve", decided_by="auto-approve")

    @classmethod
    def scripted(cls, decisions: list[dict]) -> "GatePolicy":
        script: dict[str, list[dict]] = {}
        for d in decisions:
            script.setdefault(d["gate_id"], []).append(normalize_decision(d))
        return cls(mode="scripted", script=script, decided_by="scripted")

    @classmethod
    def interactive(cls, block: bool = False) -> "GatePolicy":
        return cls(mode="interactive", block_until_resolved=block)

    def next_scripted(self, gate_id: str) -> dict:
        queue = self.script.get(gate_id)
        if queue:
            return queue.pop(0)
        return {"decision": "approve"}


@dataclass
class RunContext:
    """Everything a graph run needs from its session."""

    session_id: str
    role: AgentRole
    policy: PermissionPolicy
    budget: InvocationBudget
    fabric: ToolFabric
    transforms: dict[str, Callable]
    gate_policy: GatePolicy
    gatebook: GateBook
    checkpoints: "CheckpointStore"
    recorder: Any = None          # TrajectoryRecorder, optional for bare runs
    events: Any = None            # EventBus, optional
    reasoner: Any = None
    seed: int = 0
    alerts: list = field(default_factory=list)

    def emit(self, kind: str, data: dict | None = None) -> None:
        if self.events is not None:
            self.events.emit(kind, data)

    def record_tool(self, action: Action, result_digest: str,
                    artifacts: tuple = (), wall_ms: float = 0.0) -> None:
        if self.recorder is not None:
            self.recorder.record(action, result_digest, artifacts=artifacts, wall_ms=wall_ms)

    def note(self, role: AgentRole, text: str) -> None:
        if self.recorder is not None:
            self.recorder.record(Action.thought(role, text), digest_json(text))


class CheckpointStore:
    def __init__(self, session_id: str):
        self.session_id = session_id
        self.checkpoints: dict[str, Checkpoint] = {}
        self.order: list[str] = []
        self._n = 0

    def add(self, checkpoint: Checkpoint) -> None:
        self.checkpoints[checkpoint.checkpoint_id] = checkpoint
        self.order.append(checkpoint.checkpoint_id)

    def get(self, checkpoint_id: str) -> Checkpoint:
        cp = self.checkpoints.get(checkpoint_id)
        if cp is None or cp.session != self.session_id:
            raise UnknownCheckpoint(checkpoint_id)
        return cp

    def by_label(self, label: str) -> Checkpoint | None:
        for cid in reversed(self.order):
            if self.checkpoints[cid].label == label:
                return self.checkpoints[cid]
        return None

    def next_id(self) -> str:
        self._n += 1
        return f"cp-{self._n:04d}"


@dataclass
class GraphRunResult:
    status: str                   # completed | suspended | rejected | aborted
    outputs: dict
    failures: list[FailureRecord]
    tickets: list[GateTicket]
    checkpoints: list[str]
    node_digests: dict[str, Digest]
    node_outputs: dict[str, dict]
    node_refs: dict[str, Digest] = field(default_factory=dict)

    @property
    def pending_tickets(self) -> list[GateTicket]:
        return [t for t in self.tickets if t.pending]


def _resolve_ref(ref: str, scope: dict) -> Any:
    """Resolve a '$name.path' template reference against ``scope``."""
    if not (isinstance(ref, str) and ref.startswith("$")):
        return ref
    path = ref[1:].split(".")
    value: Any = scope
    for part in path:
        if isinstance(value, dict) and part in value:
            value = value[part]
        else:
            raise AdapterError(ref, f"unresolvable reference {ref!r}")
    return value


class GraphRun:
    """One resumable execution of a skill graph."""

    def __init__(self, graph: SkillGraph, inputs: dict, ctx: RunContext,
                 input_refs: dict[str, Digest] | None = None, label: str = ""):
        self.graph = graph
        self.ctx = ctx
        self.label = label or graph.name
        self.run_inputs = dict(inputs)
        self.input_refs = dict(input_refs or {})
        self.episode = EpisodeLog(role=ctx.role, require_discovery=False)
        # edge latches keyed "src->dst:key" so they serialize cleanly
        self.latches: dict[str, dict] = {}
        self.node_states: dict[str, str] = {n: "pending" for n in graph.nodes}
        self.exec_counts: dict[str, int] = {n: 0 for n in graph.nodes}
        self.back_fires: dict[str, int] = {}
        self.failures: list[FailureRecord] = []
        self.tickets: list[GateTicket] = []
        self.checkpoint_ids: list[str] = []
        self.node_digests: dict[str, Digest] = {}
        self.node_outputs: dict[str, dict] = {}
        self.node_refs: dict[str, Digest] = {}
        self.status = "running"
        self._seq = 0
        self._waiting_gate: str | None = None
        self._resolved_values: dict[str, dict | None] = {}
        self._decision_lock = threading.Lock()

    # ------------------------------------------------------------------
    # state plumbing
    # ------------------------------------------------------------------

    def _latch(self, src: str, dst: str, key: str, value: Any, ref: Digest | None) -> None:
        self._seq += 1
        self.latches[f"{src}->{dst}:{key}"] = {
            "src": src, "dst": dst, "key": key,
            "value": value, "ref": ref, "seq": self._seq,
        }

    def _available(self, node: NodeSpec, key: str) -> bool:
        in_edges = [e for e in self.graph.in_edges(node.node_id) if e.key == key]
        if in_edges:
            if any(f"{e.src}->{e.dst}:{e.key}" in self.latches for e in in_edges):
                return True
            # producers all dead -> value will never arrive
            if all(self.node_states.get(e.src) in ("failed", "dead") for e in in_edges):
                return False
            return False
        return key in node.params or key in self.run_inputs

    def _resolve_input(self, node: NodeSpec, key: str) -> tuple[Any, Digest | None]:
        in_edges = [e for e in self.graph.in_edges(node.node_id) if e.key == key]
        best = None
        for e in in_edges:
            latch = self.latches.get(f"{e.src}->{e.dst}:{e.key}")
            if latch and (best is None or latch["seq"] > best["seq"]):
                best = latch
        if best is not None:
            return best["value"], best.get("ref")
        if key in node.params:
            return node.params[key], None
        if key in self.run_inputs:
            return self.run_inputs[key], self.input_refs.get(key)
        raise AdapterError(key, f"node {node.node_id}: input {key!r} unavailable")

    def _node_keys(self, node: NodeSpec) -> list[str]:
        if node.passthrough:
            return sorted({e.key for e in self.graph.out_edges(node.node_id)})
        return node.input_keys()

    def _ready(self, node_id: str) -> bool:
        if self.node_states[node_id] != "pending":
            return False
        node = self.graph.nodes[node_id]
        for key in self._node_keys(node):
            if not self._available(node, key):
                return False
        if node.passthrough:
            # wait for every incoming branch before merging
            for e in self.graph.in_edges(node_id):
                if (f"{e.src}->{e.dst}:{e.key}" not in self.latches
                        and self.node_states.get(e.src) not in ("failed", "dead")):
                    return False
        return True

    def _mark_dead_closure(self) -> None:
        # a node is dead when some required input can never arrive
        changed = True
        while changed:
            changed = False
            for node_id, node in self.graph.nodes.items():
                if self.node_states[node_id] != "pending":
                    continue
                for key in self._node_keys(node):
                    in_edges = [e for e in self.graph.in_edges(node_id) if e.key == key]
                    if not in_edges:
                        continue
                    latched = any(f"{e.src}->{e.dst}:{e.key}" in self.latches for e in in_edges)
                    if latched:
                        continue
                    if all(self.node_states.get(e.src) in ("failed", "dead") for e in in_edges):
                        self.node_states[node_id] = "dead"
                        changed = True
                        break

    # ------------------------------------------------------------------
    # checkpoints and rollback
    # ------------------------------------------------------------------

    def graph_state_digest(self) -> Digest:
        serial = {
            "latches": {k: {"value": v["value"], "seq": v["seq"]}
                        for k, v in sorted(self.latches.items())},
            "states": dict(sorted(self.node_states.items())),
            "exec": dict(sorted(self.exec_counts.items())),
            "fires": dict(sorted(self.back_fires.items())),
        }
        return digest_json(serial)

    def take_checkpoint(self, node_id: str, label: str,
                        state_overrides: dict[str, str] | None = None) -> Checkpoint:
        store = self.ctx.checkpoints
        node_states = dict(self.node_states)
        if state_overrides:
            node_states.update(state_overrides)
        saved_states = self.node_states
        self.node_states = node_states
        graph_digest = self.graph_state_digest()
        self.node_states = saved_states
        cp = Checkpoint(
            checkpoint_id=store.next_id(),
            session=self.ctx.session_id,
            node_id=node_id,
            label=label,
            created_at=self._seq,
            artifact_digest=self.ctx.fabric.ledger.visibility_digest(),
            graph_digest=graph_digest,
            state={
                "latches": {k: dict(v) for k, v in self.latches.items()},
                "node_states": node_states,
                "exec_counts": dict(self.exec_counts),
                "back_fires": dict(self.back_fires),
                "seq": self._seq,
                "fabric": self.ctx.fabric.snapshot(),
                "episode_calls": self.episode.calls_used,
                "live_artifacts": self.ctx.fabric.ledger.live_ids(),
                "failures": [f.to_json() for f in self.failures],
                "node_digests": dict(self.node_digests),
                "node_outputs": {k: dict(v) for k, v in self.node_outputs.items()},
                "node_refs": dict(self.node_refs),
            },
        )
        store.add(cp)
        self.checkpoint_ids.append(cp.checkpoint_id)
        self.ctx.emit("checkpoint_created", {"checkpoint_id": cp.checkpoint_id,
                                             "label": label, "node_id": node_id})
        return cp

    def rollback(self, checkpoint_id: str) -> Checkpoint:
        cp = self.ctx.checkpoints.get(checkpoint_id)
        state = cp.state
        self.latches = {k: dict(v) for k, v in state["latches"].items()}
        self.node_states = dict(state["node_states"])
        self.exec_counts = dict(state["exec_counts"])
        self.back_fires = dict(state["back_fires"])
        self._seq = state["seq"]
        self.episode.calls_used = state["episode_calls"]
        self.failures = [FailureRecord(**f) for f in state.get("failures", [])]
        self.node_digests = dict(state.get("node_digests", {}))
        self.node_outputs = {k: dict(v) for k, v in state.get("node_outputs", {}).items()}
        self.node_refs = dict(state.get("node_refs", {}))
        self.ctx.fabric.restore(state["fabric"])
        live = set(state["live_artifacts"])
        ledger = self.ctx.fabric.ledger
        for aid in ledger.live_ids():
            if aid not in live:
                ledger.mark_superseded(aid)
        self.status = "running"
        self._waiting_gate = None
        if not self.verify_restored(cp):   # restore must reproduce the snapshot exactly
            raise RunAborted(f"checkpoint {checkpoint_id} restore mismatch")
        self.ctx.emit("rollback", {"checkpoint_id": checkpoint_id, "label": cp.label})
        if self.ctx.recorder is not None:
            # the marker embeds the restored dispatch state so replay can
            # rewind its fabric at the same point
            import json as _json
            marker = "rollback:" + _json.dumps(
                {"checkpoint": checkpoint_id, "fabric": state["fabric"]},
                sort_keys=True)
            self.ctx.recorder.record(
                Action.thought(self.ctx.role, marker),
                digest_json({"rollback": checkpoint_id}))
        return cp

    def verify_restored(self, cp: Checkpoint) -> bool:
        return (self.graph_state_digest() == cp.graph_digest
                and self.ctx.fabric.ledger.visibility_digest() == cp.artifact_digest)

    # ------------------------------------------------------------------
    # node execution
    # ------------------------------------------------------------------

    def _adapt_bundle(self, node: NodeSpec, values: dict,
                      contracts: tuple[ContractEntry, ...], side: str) -> dict:
        adapted = {}
        for entry in contracts:
            value = values.get(entry.key)
            if value is None and side == "output":
                adapted[entry.key] = None   # withheld: not propagated
                continue
            adapted[entry.key] = adapt_format(value, entry)
        return adapted

    def _execute_tool_node(self, node: NodeSpec, inputs: dict,
                           input_refs: tuple[Digest, ...]) -> dict:
        server = node.tool["server"]
        tool_name = node.tool["name"]
        tool = self.ctx.fabric.registry.get_tool(f"{server}/{tool_name}")
        if tool is None:
            raise ToolError("unknown_tool", f"{server}/{tool_name} is not registered")

        items = inputs[node.foreach] if node.foreach else [None]
        collected: list[Any] = []
        last_payload: Any = None
        for item in items:
            scope = dict(inputs)
            if item is not None:
                scope["item"] = item
            params = {k: _resolve_ref(v, scope) for k, v in node.tool.get("params", {}).items()}
            params = {k: v for k, v in params.items() if v is not None}
            attempts = node.retry + 1
            payload = None
            error: ToolError | None = None
            for _ in range(attempts):
                call = validate_params(params, tool)
                action = Action.tool_call(self.ctx.role, tool.ref, call.params_dict)
                started = time.perf_counter()
                try:
                    result = self.ctx.fabric.execute_tool(
                        call, self.ctx.role, self.ctx.policy, self.ctx.budget,
                        self.episode, parents=input_refs)
                except PermissionDenied as exc:
                    # a graph node outran its worker's grants: governance
                    # incident, and the node cannot run at all
                    if self.ctx.recorder is not None:
                        self.ctx.recorder.add_violation("permission", str(exc))
                    raise RunAborted(f"node {node.node_id}: {exc}", cause=exc)
                except ToolError as exc:
                    error = exc
                    err_result = result_from_error(exc)
                    self.ctx.record_tool(action, err_result.digest(),
                                         wall_ms=(time.perf_counter() - started) * 1e3)
                    continue
                error = None
                self.ctx.record_tool(action, result.digest(),
                                     artifacts=result.produced_artifacts,
                                     wall_ms=(time.perf_counter() - started) * 1e3)
                payload = result.payload
                break
            if error is not None:
                item_ref = ""
                if isinstance(item, dict):
                    item_ref = str(item.get("smiles") or item.get("id") or "")
                if not item_ref:
                    item_ref = node.node_id if item is None else digest_json(item)[:12]
                if node.on_failure == "penalize_and_continue":
                    record = FailureRecord(node_id=node.node_id, item_ref=item_ref,
                                           error_kind=error.kind, penalty_applied=True)
                    self.failures.append(record)
                    self.ctx.emit("failure_contained", record.to_json())
                    continue
                if node.on_failure == "abort_branch":
                    record = FailureRecord(node_id=node.node_id, item_ref=item_ref,
                                           error_kind=error.kind)
                    self.failures.append(record)
                    raise _BranchAbort(record)
                raise RunAborted(f"node {node.node_id} failed: {error}", cause=error)
            collected.append(payload)
            last_payload = payload

        scope = dict(inputs)
        scope["payload"] = last_payload
        scope["items"] = collected
        outputs = {}
        for out_key, ref in node.bind.items():
            outputs[out_key] = _resolve_ref(ref, scope)
        return outputs

    def _execute_transform(self, node: NodeSpec, inputs: dict) -> dict:
        fn = self.ctx.transforms.get(node.transform or "")
        if fn is None:
            raise RunAborted(f"node {node.node_id}: unknown transform {node.transform!r}")
        return fn(inputs, self.ctx)

    def _activate_gate(self, node: NodeSpec, inputs: dict) -> dict | None:
        """Raise a ticket; returns gate outputs when resolved inline, None
        when the run suspends."""
        gate = node.gate
        assert gate is not None
        # snapshot with the gate pending so a rollback to it re-raises the gate
        cp = self.take_checkpoint(node.node_id, gate.checkpoint or f"gate-{gate.gate_id}",
                                  state_overrides={node.node_id: "pending"})
        rationale = gate.prompt
        try:
            rationale = gate.prompt.format(**{k: inputs.get(k) for k in inputs})
        except (KeyError, IndexError, ValueError):
            pass
        ticket = GateTicket(
            ticket_id=f"{self.ctx.session_id}-t{len(self.ctx.gatebook.order) + 1:03d}",
            session=self.ctx.session_id,
            gate_id=gate.gate_id,
            node_id=node.node_id,
            rationale=rationale,
            proposed={k: v for k, v in inputs.items()},
            editable=gate.editable,
            checkpoint_id=cp.checkpoint_id,
        )
        self.tickets.append(ticket)
        self.ctx.gatebook.add(ticket, run=self)
        self.ctx.emit("ticket_raised", ticket.to_json())

        policy = self.ctx.gate_policy
        if policy.mode == "auto_approve":
            return self._apply_decision(ticket, {"decision": "approve"},
                                        decided_by="auto-approve")
        if policy.mode == "scripted":
            decision = policy.next_scripted(gate.gate_id)
            return self._apply_decision(ticket, decision, decided_by="scripted")
        # interactive
        if policy.block_until_resolved:
            book = self.ctx.gatebook
            with book.condition:
                while ticket.pending:
                    book.condition.wait(timeout=0.05)
            if ticket.status == "rejected":
                self.status = "rejected"
                raise RunAborted(f"gate {gate.gate_id} rejected: "
                                 f"{ticket.decision.get('reason', '')}")
            if ticket.status == "rolled_back":
                return None
            return self._resolved_values.pop(ticket.ticket_id, dict(ticket.proposed))
        self._waiting_gate = ticket.ticket_id
        return None

    def _apply_decision(self, ticket: GateTicket, decision: dict | str,
                        decided_by: str) -> dict | None:
        """Validate + apply a gate decision. Returns the gate's output values
        (or None for rollback/reject paths). Decisions are serialized per run
        so a ticket resolves exactly once."""
        with self._decision_lock:
            return self._apply_decision_locked(ticket, decision, decided_by)

    def _apply_decision_locked(self, ticket: GateTicket, decision: dict | str,
                               decided_by: str) -> dict | None:
        decision = normalize_decision(decision)
        kind = decision["decision"]
        node = self.graph.nodes[ticket.node_id]

        if ticket.status != "pending":
            raise TicketAlreadyResolved(ticket.ticket_id)

        if kind == "correct":
            patch = decision.get("patch", {})
            check_patch(ticket, patch)           # ticket stays pending on refusal
            adapted_patch = {}
            for entry in node.outputs:
                if entry.key in patch:
                    adapted_patch[entry.key] = adapt_format(patch[entry.key], entry)
            values = dict(ticket.proposed)
            values.update(adapted_patch)
            mark_resolved(ticket, "corrected", decision, decided_by, self._seq)
            if self.ctx.recorder is not None:
                self.ctx.recorder.record(
                    Action.thought(self.ctx.role,
                                   f"gate:{ticket.gate_id}:corrected"),
                    digest_json({"decision": decision, "gate": ticket.gate_id}))
            # corrections are provenance events
            ref = self.ctx.fabric.ledger.put_artifact(
                {"ticket": ticket.ticket_id, "patch": patch},
                parents=(), producer="gate:correction", params=decision)
            self.node_refs[ticket.node_id + ":correction"] = ref
        elif kind == "approve":
            values = dict(ticket.proposed)
            mark_resolved(ticket, "approved", decision, decided_by, self._seq)
            if self.ctx.recorder is not None:
                self.ctx.recorder.record(
                    Action.thought(self.ctx.role, f"gate:{ticket.gate_id}:approved"),
                    digest_json({"decision": decision, "gate": ticket.gate_id}))
        elif kind == "reject":
            mark_resolved(ticket, "rejected", decision, decided_by, self._seq)
            self.ctx.emit("ticket_resolved", ticket.to_json())
            self.ctx.gatebook.notify()
            if self.ctx.recorder is not None:
                self.ctx.recorder.record(
                    Action.thought(self.ctx.role, f"gate:{ticket.gate_id}:rejected"),
                    digest_json({"decision": decision, "gate": ticket.gate_id}))
            self.status = "rejected"
            raise RunAborted(f"gate {ticket.gate_id} rejected: "
                             f"{decision.get('reason', '')}")
        elif kind == "rollback":
            checkpoint_id = decision.get("checkpoint_id", "")
            if not checkpoint_id and decision.get("checkpoint_label"):
                found = self.ctx.checkpoints.by_label(decision["checkpoint_label"])
                if found is None:
                    raise UnknownCheckpoint(decision["checkpoint_label"])
                checkpoint_id = found.checkpoint_id
            cp = self.ctx.checkpoints.get(checkpoint_id)   # UnknownCheckpoint first
            # restore before announcing so a blocked run thread wakes into
            # the already-rolled-back state
            self.rollback(cp.checkpoint_id)
            mark_resolved(ticket, "rolled_back", decision, decided_by, self._seq)
            self.ctx.emit("ticket_resolved", ticket.to_json())
            self.ctx.gatebook.notify()
            return None
        else:  # pragma: no cover
            raise ValueError(kind)

        self._resolved_values[ticket.ticket_id] = values
        self.ctx.emit("ticket_resolved", ticket.to_json())
        self.ctx.gatebook.notify()
        return values

    def _finish_node(self, node: NodeSpec, outputs: dict,
                     input_refs: tuple[Digest, ...]) -> None:
        adapted = self._adapt_bundle(node, outputs, node.outputs, "output") \
            if not node.passthrough else dict(outputs)
        propagated = {k: v for k, v in adapted.items() if v is not None}
        bundle_ref = self.ctx.fabric.ledger.put_artifact(
            {"graph": self.graph.name, "node": node.node_id, "outputs": adapted,
             "exec": self.exec_counts[node.node_id]},
            parents=input_refs,
            producer=f"node:{self.label}/{node.node_id}",
            params={"kind": node.kind})
        self.node_refs[node.node_id] = bundle_ref
        self.node_outputs[node.node_id] = adapted
        self.node_digests[node.node_id] = digest_json(
            {k: adapted[k] for k in sorted(adapted)})
        self.node_states[node.node_id] = "done"

        fired_pairs: set[tuple[str, str]] = set()
        for e in self.graph.out_edges(node.node_id):
            pair = (e.src, e.dst)
            if pair in self.graph.cycle_bounds:
                if e.key in propagated and pair not in fired_pairs:
                    bound = self.graph.cycle_bounds[pair]
                    fired = self.back_fires.get(f"{e.src}->{e.dst}", 0)
                    if fired < bound:
                        fired_pairs.add(pair)
                continue
            if e.key in propagated:
                self._latch(e.src, e.dst, e.key, propagated[e.key], bundle_ref)

        for pair in fired_pairs:
            self._fire_back_edge(pair, propagated, bundle_ref)

        if node.checkpoint:
            self.take_checkpoint(node.node_id, node.checkpoint)
        self.ctx.emit("node_finished", {"node_id": node.node_id,
                                        "graph": self.graph.name,
                                        "digest": self.node_digests[node.node_id]})

    def _fire_back_edge(self, pair: tuple[str, str], propagated: dict,
                        bundle_ref: Digest) -> None:
        src, dst = pair
        key_count = 0
        for e in self.graph.out_edges(src):
            if (e.src, e.dst) == pair and e.key in propagated:
                self._latch(e.src, e.dst, e.key, propagated[e.key], bundle_ref)
                key_count += 1
        if key_count == 0:
            return
        self.back_fires[f"{src}->{dst}"] = self.back_fires.get(f"{src}->{dst}", 0) + 1
        for node_id in self.graph.cycle_body(dst, src):
            self.node_states[node_id] = "pending"

    def _run_node(self, node_id: str) -> None:
        node = self.graph.nodes[node_id]
        self.exec_counts[node_id] += 1
        self.node_states[node_id] = "running"
        self.ctx.emit("node_started", {"node_id": node_id, "graph": self.graph.name})
        values: dict = {}
        refs: list[Digest] = []
        try:
            for key in self._node_keys(node):
                value, ref = self._resolve_input(node, key)
                values[key] = value
                if ref:
                    refs.append(ref)
            if not node.passthrough:
                values = self._adapt_bundle(node, values, node.inputs, "input")
            input_refs = tuple(dict.fromkeys(refs))

            if node.kind == "tool_step":
                outputs = self._execute_tool_node(node, values, input_refs)
            elif node.kind == "transform":
                outputs = self._execute_transform(node, values)
            elif node.kind == "gate":
                outputs = self._activate_gate(node, values)
                if outputs is None:
                    if self.status == "running" and self._waiting_gate:
                        self.node_states[node_id] = "suspended"
                    else:
                        # rollback reset this node's state already
                        pass
                    return
            else:  # fanout / join
                outputs = values
            self._finish_node(node, outputs, input_refs)
        except _BranchAbort:
            self.node_states[node_id] = "failed"
            self.ctx.emit("node_failed", {"node_id": node_id, "contained": True})
        except (AdapterError, DualPlaneError) as exc:
            if isinstance(exc, RunAborted):
                raise
            if node.on_failure == "abort_run":
                self.node_states[node_id] = "failed"
                self.ctx.emit("node_failed", {"node_id": node_id, "contained": False})
                raise RunAborted(f"node {node_id} failed: {exc}", cause=exc)
            record = FailureRecord(node_id=node_id, item_ref=node_id,
                                   error_kind=getattr(exc, "code", "error"),
                                   penalty_applied=node.on_failure == "penalize_and_continue")
            self.failures.append(record)
            self.node_states[node_id] = "failed"
            self.ctx.emit("node_failed", {"node_id": node_id, "contained": True})

    # ------------------------------------------------------------------
    # driving loop
    # ------------------------------------------------------------------

    def drain(self) -> None:
        """Execute until nothing is runnable (done, dead, or suspended)."""
        while True:
            if self.status in ("rejected", "aborted"):
                return
            ready = [n for n in self.graph.nodes if self._ready(n)]
            if not ready:
                self._mark_dead_closure()
                ready = [n for n in self.graph.nodes if self._ready(n)]
                if not ready:
                    return
            ready.sort(key=lambda n: self.graph.topo_index.get(n, 0))
            self._run_node(ready[0])
            if self._waiting_gate:
                return

    def resume_after_gate(self, ticket: GateTicket, values: dict | None) -> None:
        """Complete a suspended gate node after an external decision."""
        self._waiting_gate = None
        node = self.graph.nodes[ticket.node_id]
        if values is not None:
            refs = tuple(r for r in [self.node_refs.get(e.src)
                                     for e in self.graph.in_edges(node.node_id)] if r)
            self._finish_node(node, values, refs)
        self.drain()

    def result(self) -> GraphRunResult:
        if self.status == "running":
            if any(t.pending for t in self.tickets):
                status = "suspended"
            else:
                status = "completed"
        else:
            status = self.status
        outputs: dict = {}
        for exit_id in self.graph.exits:
            for k, v in (self.node_outputs.get(exit_id) or {}).items():
                if v is not None:
                    outputs[k] = v
        return GraphRunResult(
            status=status,
            outputs=outputs,
            failures=list(self.failures),
            tickets=list(self.tickets),
            checkpoints=list(self.checkpoint_ids),
            node_digests=dict(self.node_digests),
            node_outputs=dict(self.node_outputs),
            node_refs=dict(self.node_refs),
        )


class _BranchAbort(Exception):
    def __init__(self, record: FailureRecord):
        self.record = record
        super().__init__(record.error_kind)


def execute_graph(graph: SkillGraph, inputs: dict, ctx: RunContext,
                  input_refs: dict[str, Digest] | None = None,
                  label: str = "") -> GraphRunResult:
    """Run a validated graph to completion, suspension, or abort.

    The entry contract is checked against ``inputs`` up front; gate behavior
    follows ``ctx.gate_policy``. RunAborted propagates for abort_run policies
    and gate rejections; suspension is a resumable result, not an error.
    """
    entry = graph.nodes[graph.entry]
    if not entry.passthrough:
        for contract in entry.inputs:
            has_edge = any(e.key == contract.key for e in graph.in_edges(graph.entry))
            if not has_edge and contract.key not in entry.params:
                adapt_format(inputs.get(contract.key), contract)
    run = GraphRun(graph, inputs, ctx, input_refs=input_refs, label=label)
    try:
        run.drain()
    except RunAborted as exc:
        run.status = run.status if run.status == "rejected" else "aborted"
        exc.run = run
        exc.result = run.result()
        raise
    return run.result()


def resolve_gate(ticket_id: str, decision: dict | str, gatebook: GateBook,
                 decided_by: str = "operator") -> GraphRunResult | None:
    """Resolve a pending ticket and push its run forward.

    approve resumes with the proposed values; correct applies a patch limited
    to editable keys; reject aborts the run; rollback restores the referenced
    checkpoint and re-executes from there.
    """
    ticket = gatebook.get(ticket_id)
    run: GraphRun | None = gatebook.run_for(ticket_id)
    if run is None:
        raise UnknownTicket(ticket_id)
    blocked_waiter = run.ctx.gate_policy.block_until_resolved
    try:
        values = run._apply_decision(ticket, decision, decided_by)
    except RunAborted as exc:
        exc.run = run
        if blocked_waiter:
            return None
        raise
    if blocked_waiter:
        # the run's own thread wakes up and continues
        return None
    if ticket.status == "rolled_back":
        run.drain()
        return run.result()
    run.resume_after_gate(ticket, values)
    return run.result()
