"""Session wiring: trajectory recording, stores, and run setup.

A session bundles everything one run touches: the registry and fabric, the
artifact ledger, the trajectory recorder (which owns the hybrid state), the
event bus, gate book and checkpoint store. Writes are serialized per session
by construction: one supervisor loop drives one session.
"""

from __future__ import annotations

import itertools
import json
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .engine import CheckpointStore, GatePolicy, RunContext
from .events import EventBus
from .fabric import InvocationBudget, ToolFabric
from .gates import GateBook
from .ledger import ArtifactLedger
from .manifests import load_manifest_dir
from .registry import ToolRegistry
from .scenarios import Scenario, load_scenarios
from .servers import default_handlers
from .skills import TRANSFORMS, load_alert_patterns
from .summarize import summarize_output
from .types import (Action, AgentRole, ContextEntry, Digest, HybridState,
                    PermissionPolicy, Trajectory, TrajectoryRecord, digest,
                    digest_json)

CONTEXT_CAP_DEFAULT = 32_000
_session_counter = itertools.count(1)
_counter_lock = threading.Lock()


class TrajectoryRecorder:
    """Owns the session's hybrid state and its append-only trajectory."""

    def __init__(self, session_id: str, seed: int,
                 context_cap: int = CONTEXT_CAP_DEFAULT,
                 summarize_limit: int = 2_000, meta: dict | None = None):
        self.trajectory = Trajectory(session_id=session_id, seed=seed,
                                     meta=dict(meta or {}))
        self.state = HybridState(session_id=session_id)
        self.context_cap = context_cap
        self.summarize_limit = summarize_limit

    def record(self, action: Action, result_digest: Digest,
               artifacts: tuple = (), wall_ms: float = 0.0) -> None:
        self.state.step_index += 1
        for artifact in artifacts:
            self.state.artifacts.add(artifact)
        self.trajectory.append(TrajectoryRecord(
            state_digest=self.state.state_digest(),
            action=action, result_digest=result_digest, wall_ms=wall_ms))

    def add_context(self, role: str, text: str) -> None:
        """Append a summary to the session context, keeping every entry under
        the summarization limit and the total under the context cap."""
        if len(text) > self.summarize_limit:
            text = summarize_output(text, self.summarize_limit)
        self.state.context.append(ContextEntry(role=role, text=text))
        squeeze_at = 0
        while self.state.context_chars > self.context_cap:
            if squeeze_at >= len(self.state.context) - 1:
                # everything squeezed: drop the oldest entry outright
                self.state.context.pop(0)
                continue
            entry = self.state.context[squeeze_at]
            squeezed = summarize_output(entry.text, max(128, self.summarize_limit // 8)) \
                if len(entry.text) > 128 else entry.text
            if squeezed == entry.text:
                squeeze_at += 1
            else:
                self.state.context[squeeze_at] = ContextEntry(entry.role, squeezed)

    def add_violation(self, kind: str, detail: str) -> None:
        self.trajectory.compliance_violations.append({"kind": kind, "detail": detail})

    def note(self, text: str) -> None:
        self.trajectory.notes.append(text)


@dataclass
class SessionConfig:
    seed: int = 0
    policy: PermissionPolicy = field(default_factory=PermissionPolicy)
    budget: InvocationBudget = field(default_factory=InvocationBudget)
    gate_policy: GatePolicy = field(default_factory=GatePolicy.auto)
    budget_k: int = 8
    replan_max: int = 3
    context_cap: int = CONTEXT_CAP_DEFAULT
    manifest_dir: Path | None = None
    scenario_dir: Path | None = None
    out_dir: Path | None = None


@dataclass
class SessionStores:
    session_id: str
    query: str
    config: SessionConfig
    registry: ToolRegistry
    scenario: Scenario | None
    fabric: ToolFabric
    ledger: ArtifactLedger
    recorder: TrajectoryRecorder
    events: EventBus
    gatebook: GateBook
    checkpoints: CheckpointStore
    reasoner: Any = None
    alerts: list = field(default_factory=list)
    input_ref: Digest = ""
    blackboard: dict = field(default_factory=dict)
    blackboard_refs: dict = field(default_factory=dict)
    status: str = "running"
    mode: str = ""
    report: dict = field(default_factory=dict)

    @property
    def seed(self) -> int:
        return self.config.seed

    def run_ctx(self, role: AgentRole) -> RunContext:
        return RunContext(
            session_id=self.session_id,
            role=role,
            policy=self.config.policy,
            budget=self.config.budget,
            fabric=self.fabric,
            transforms=TRANSFORMS,
            gate_policy=self.config.gate_policy,
            gatebook=self.gatebook,
            checkpoints=self.checkpoints,
            recorder=self.recorder,
            events=self.events,
            reasoner=self.reasoner,
            seed=self.config.seed,
            alerts=self.alerts,
        )

    def descriptor(self) -> dict:
        pending = [t.to_json() for t in self.gatebook.pending()]
        return {
            "session_id": self.session_id,
            "query": self.query,
            "mode": self.mode,
            "status": ("suspended_awaiting_gate" if pending and
                       self.status == "running" else self.status),
            "pending_tickets": pending,
        }

    # -- persistence -----------------------------------------------------

    def save(self) -> Path | None:
        if self.config.out_dir is None:
            return None
        base = Path(self.config.out_dir) / "sessions" / self.session_id
        base.mkdir(parents=True, exist_ok=True)
        (base / "trajectory.json").write_text(
            json.dumps(self.recorder.trajectory.to_json(), indent=2, sort_keys=True),
            encoding="utf-8")
        (base / "report.json").write_text(
            json.dumps(self.report, indent=2, sort_keys=True), encoding="utf-8")
        self.ledger.export_bundle(base / "audit",
                                  trajectory_json=self.recorder.trajectory.to_json())
        cp_dir = base / "checkpoints"
        cp_dir.mkdir(exist_ok=True)
        for cid in self.checkpoints.order:
            cp = self.checkpoints.checkpoints[cid]
            (cp_dir / f"{cid}.json").write_text(
                json.dumps(cp.to_json(), indent=2, sort_keys=True), encoding="utf-8")
        return base


def new_session_id(query: str) -> str:
    with _counter_lock:
        n = next(_session_counter)
    return f"s{n:03d}-{digest(query)[:8]}"


def create_session(query: str, config: SessionConfig, reasoner: Any = None,
                   registry: ToolRegistry | None = None,
                   scenario: Scenario | None = None) -> SessionStores:
    """Wire a fresh session: registry from manifests, scenario by query
    match, fabric with scenario failure plans, and empty stores."""
    if registry is None:
        registry = ToolRegistry()
        for manifest in load_manifest_dir(config.manifest_dir):
            registry.register(manifest)
    if scenario is None:
        scenario = load_scenarios(config.scenario_dir).match(query)

    session_id = new_session_id(query)
    ledger = ArtifactLedger(session=session_id)
    fabric = ToolFabric(registry=registry, ledger=ledger, seed=config.seed,
                        handlers=default_handlers(), scenario=scenario)
    if scenario is not None:
        rules = scenario.dock_failure_rules()
        if rules:
            fabric.add_failure_rules("docking", "dock_molecule", rules)

    recorder = TrajectoryRecorder(
        session_id=session_id, seed=config.seed, context_cap=config.context_cap,
        summarize_limit=config.budget.max_output_chars,
        meta={
            "query": query,
            "policy": config.policy.to_json(),
            "scenario": scenario.scenario_id if scenario else None,
            "budget_k": config.budget_k,
            "replan_max": config.replan_max,
            "gate_mode": config.gate_policy.mode,
        })

    stores = SessionStores(
        session_id=session_id,
        query=query,
        config=config,
        registry=registry,
        scenario=scenario,
        fabric=fabric,
        ledger=ledger,
        recorder=recorder,
        events=EventBus(session_id),
        gatebook=GateBook(),
        checkpoints=CheckpointStore(session_id),
        reasoner=reasoner,
        alerts=load_alert_patterns(),
    )
    stores.input_ref = ledger.put_artifact(
        {"kind": "user_input", "query": query},
        producer="user:input", params={"seed": config.seed})
    stores.events.emit("session_started", {"session_id": session_id, "query": query})
    return stores
