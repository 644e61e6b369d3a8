"""Deterministic replay: re-execute a trajectory's tool calls and compare digests.

Replay rebuilds a fresh fabric from the same manifests, scenario and seed,
dispatches every recorded tool call in order (so per-tool ordinals evolve
identically), and compares result digests step by step. Rollback markers in
the trajectory restore dispatch counters exactly as the original run did.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ManifestMissing, PermissionDenied, ToolError
from .fabric import EpisodeLog, InvocationBudget, ToolFabric, result_from_error
from .ledger import ArtifactLedger
from .manifests import load_manifest_dir
from .params import validate_params
from .registry import ToolRegistry
from .scenarios import load_scenarios
from .servers import default_handlers
from .types import ActionKind, AgentRole, PermissionPolicy, Trajectory


@dataclass
class ReplayVerdict:
    match: bool
    divergence_step: int | None = None
    detail: str = ""
    steps_checked: int = 0

    def to_json(self) -> dict:
        return {"match": self.match, "divergence_step": self.divergence_step,
                "detail": self.detail, "steps_checked": self.steps_checked}


def build_replay_fabric(trajectory: Trajectory,
                        registry: ToolRegistry | None = None,
                        manifest_dir: Path | None = None,
                        scenario_dir: Path | None = None) -> ToolFabric:
    if registry is None:
        registry = ToolRegistry()
        for manifest in load_manifest_dir(manifest_dir):
            registry.register(manifest)
    scenario = None
    scenario_id = trajectory.meta.get("scenario")
    if scenario_id:
        scenario = load_scenarios(scenario_dir).by_id(scenario_id)
        if scenario is None:
            raise ManifestMissing(f"scenario fixture {scenario_id!r} unavailable for replay")
    ledger = ArtifactLedger(session=f"replay-{trajectory.session_id}")
    fabric = ToolFabric(registry=registry, ledger=ledger, seed=trajectory.seed,
                        handlers=default_handlers(), scenario=scenario)
    if scenario is not None:
        rules = scenario.dock_failure_rules()
        if rules:
            fabric.add_failure_rules("docking", "dock_molecule", rules)
    return fabric


def replay(trajectory: Trajectory, registry: ToolRegistry | None = None,
           policy: PermissionPolicy | None = None, seed: int | None = None,
           manifest_dir: Path | None = None,
           scenario_dir: Path | None = None) -> ReplayVerdict:
    """Re-execute every recorded tool call and compare result digests.

    Verdict is ``match`` iff every digest matches; otherwise the first
    diverging record index (0-based over the full trajectory) is reported.
    An empty trajectory matches vacuously.
    """
    if policy is None and trajectory.meta.get("policy"):
        policy = PermissionPolicy.from_json(trajectory.meta["policy"])
    policy = policy or PermissionPolicy.make("permissive")
    fabric = build_replay_fabric(trajectory, registry=registry,
                                 manifest_dir=manifest_dir, scenario_dir=scenario_dir)
    budget = InvocationBudget(max_calls_per_episode=10 ** 9,
                              max_output_chars=10 ** 9, max_wall_ms=10 ** 9)
    episode = EpisodeLog(role=AgentRole.SUPERVISOR, require_discovery=False)
    checked = 0
    for index, record in enumerate(trajectory.records):
        action = record.action
        if action.kind is not ActionKind.TOOL_CALL:
            # rollback markers restore dispatch state mid-stream
            if action.kind is ActionKind.THOUGHT and action.text.startswith("rollback:"):
                marker = json.loads(action.text[len("rollback:"):])
                fabric.restore(marker["fabric"])
            continue
        tool = fabric.registry.get_tool(action.tool_ref)
        if tool is None:
            raise ManifestMissing(f"tool {action.tool_ref} not present in replay registry")
        try:
            call = validate_params(action.params_dict, tool)
            result = fabric.execute_tool(call, action.issued_by, policy, budget, episode)
            got = result.digest()
        except (ToolError, PermissionDenied) as exc:
            got = result_from_error(exc).digest()
        checked += 1
        if got != record.result_digest:
            return ReplayVerdict(match=False, divergence_step=index,
                                 detail=f"digest mismatch on {action.tool_ref}",
                                 steps_checked=checked)
    return ReplayVerdict(match=True, steps_checked=checked)


def load_trajectory(path: Path | str) -> Trajectory:
    return Trajectory.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def verify_compliance(trajectory: Trajectory, policy: PermissionPolicy,
                      registry: ToolRegistry | None = None,
                      manifest_dir: Path | None = None) -> list[dict]:
    """Replay the trajectory's tool calls against the policy: returns every
    call whose category falls outside the caller's grants. A clean run with
    an empty compliance record yields an empty list."""
    if registry is None:
        registry = ToolRegistry()
        for manifest in load_manifest_dir(manifest_dir):
            registry.register(manifest)
    offenders = []
    for index, record in enumerate(trajectory.records):
        action = record.action
        if action.kind is not ActionKind.TOOL_CALL:
            continue
        tool = registry.get_tool(action.tool_ref)
        if tool is None:
            offenders.append({"step": index, "tool": action.tool_ref,
                              "reason": "unknown tool"})
            continue
        if not policy.allows(action.issued_by, tool.category):
            offenders.append({"step": index, "tool": action.tool_ref,
                              "role": action.issued_by.value,
                              "category": tool.category.value})
    return offenders
