"""Governed tool invocation: budgets, alternation, failure injection, dispatch.

The fabric sits between callers (worker episodes, graph nodes) and the
simulated servers. Permission is checked on every call — a denial is a
governance event, not a crash — and every dispatched call consumes budget,
bumps the per-tool ordinal counter (which drives deterministic failure
injection) and lands its raw payload in the session ledger.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Callable

from .errors import (AlternationViolation, BudgetExhausted, PermissionDenied,
                     ToolError)
from .ledger import ArtifactLedger
from .params import ValidatedCall
from .registry import ToolRegistry
from .summarize import summarize_output
from .types import (AgentRole, Digest, PermissionPolicy, canonical_json,
                    digest_json)

logger = logging.getLogger(__name__)

SUMMARIZE_LIMIT_DEFAULT = 2_000  # chars; configurable, see InvocationBudget


@dataclass(frozen=True)
class InvocationBudget:
    max_calls_per_episode: int = 200
    max_output_chars: int = SUMMARIZE_LIMIT_DEFAULT
    max_wall_ms: int = 600_000

    def __post_init__(self) -> None:
        if min(self.max_calls_per_episode, self.max_output_chars, self.max_wall_ms) <= 0:
            raise ValueError("budget limits must be positive")


@dataclass
class ToolResult:
    """Outcome of one dispatched invocation."""

    status: str                      # "ok" | "error"
    payload: Any = None
    error_kind: str = ""
    error_message: str = ""
    produced_artifacts: tuple[Digest, ...] = ()
    chars: int = 0
    summary: str = ""                # what enters the caller's context
    simulated_ms: float = 0.0        # deterministic latency model output

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def digest(self) -> Digest:
        if self.ok:
            return digest_json({"status": "ok", "payload": self.payload})
        return digest_json({"status": "error", "kind": self.error_kind,
                            "message": self.error_message})


@dataclass
class EpisodeEvent:
    kind: str   # "search" | "execute" | "final"
    detail: str = ""


@dataclass
class EpisodeLog:
    """Single-writer per worker episode; tracks alternation and budget use."""

    role: AgentRole
    require_discovery: bool = True
    events: list[EpisodeEvent] = field(default_factory=list)
    calls_used: int = 0
    simulated_ms_used: float = 0.0

    def record(self, kind: str, detail: str = "") -> None:
        self.events.append(EpisodeEvent(kind=kind, detail=detail))


def alternation_guard(episode_log: EpisodeLog, next_kind: str) -> None:
    """Reject the next action when it breaks the search/execute alternation.

    - a search is rejected while a previous search has not been followed by
      an execute;
    - an execute is rejected before any search in episodes that require
      discovery;
    - a final answer is rejected until at least one execute happened.
    """
    events = episode_log.events
    if next_kind == "search":
        for event in reversed(events):
            if event.kind == "execute":
                break
            if event.kind == "search":
                raise AlternationViolation(
                    "consecutive tool_search without an intervening execute_tool")
    elif next_kind == "execute":
        if episode_log.require_discovery and not any(e.kind == "search" for e in events):
            raise AlternationViolation("execute_tool before any tool_search")
    elif next_kind == "final":
        if not any(e.kind == "execute" for e in events):
            raise AlternationViolation("final answer before any execute_tool")
    else:
        raise ValueError(f"unknown episode action kind: {next_kind}")


Handler = Callable[[str, str, dict, int, dict], Any]
"""(server_id, tool_name, params, ordinal, ctx) -> JSON-able payload."""


@dataclass
class ToolFabric:
    """Per-session dispatch state over a shared registry."""

    registry: ToolRegistry
    ledger: ArtifactLedger
    seed: int = 0
    handlers: dict[str, Handler] = field(default_factory=dict)
    scenario: Any = None
    counters: dict[tuple[str, str], int] = field(default_factory=dict)
    extra_failures: dict[tuple[str, str], dict[int, str]] = field(default_factory=dict)
    workspace: dict[str, str] = field(default_factory=dict)

    # -- deterministic failure / latency models ------------------------------

    def _failure_kind(self, server_id: str, tool: str, ordinal: int) -> str | None:
        manifest = self.registry.manifests.get(server_id)
        if manifest:
            for rule in manifest.failure_plan:
                if rule.tool == tool and rule.ordinal == ordinal:
                    return rule.kind
        injected = self.extra_failures.get((server_id, tool), {})
        return injected.get(ordinal)

    def _latency_ms(self, server_id: str, ordinal: int) -> float:
        manifest = self.registry.manifests.get(server_id)
        if not manifest or manifest.latency.base_ms <= 0:
            return 0.0
        jitter_basis = digest_json([manifest.latency.jitter_seed, ordinal])
        jitter = int(jitter_basis[:8], 16) % (manifest.latency.base_ms + 1)
        return float(manifest.latency.base_ms + jitter)

    def add_failure_rules(self, server_id: str, tool: str, ordinals: dict[int, str]) -> None:
        self.extra_failures.setdefault((server_id, tool), {}).update(ordinals)

    # -- snapshot/restore (checkpoints must cover dispatch state) ------------

    def snapshot(self) -> dict:
        return {
            "counters": {f"{s}/{t}": n for (s, t), n in self.counters.items()},
            "workspace": dict(self.workspace),
        }

    def restore(self, snap: dict) -> None:
        self.counters = {}
        for ref, n in snap.get("counters", {}).items():
            server_id, _, tool = ref.partition("/")
            self.counters[(server_id, tool)] = n
        self.workspace = dict(snap.get("workspace", {}))

    # -- dispatch -------------------------------------------------------------

    def execute_tool(self, call: ValidatedCall, role: AgentRole,
                     policy: PermissionPolicy, budget: InvocationBudget,
                     episode_log: EpisodeLog,
                     parents: tuple[Digest, ...] = ()) -> ToolResult:
        """Dispatch a validated call under governance.

        Raises PermissionDenied / BudgetExhausted / ToolError; the caller
        decides whether those are contained or fatal. Long payloads come back
        summarized in ``summary`` while the raw payload is stored as an
        artifact.
        """
        tool = call.tool
        if not policy.allows(role, tool.category):
            raise PermissionDenied(role.value, tool.ref, tool.category.value)
        if episode_log.calls_used >= budget.max_calls_per_episode:
            raise BudgetExhausted(
                f"episode call budget ({budget.max_calls_per_episode}) exhausted")
        if episode_log.simulated_ms_used >= budget.max_wall_ms:
            raise BudgetExhausted("episode wall budget exhausted")

        key = (tool.server_id, tool.name)
        ordinal = self.counters.get(key, 0) + 1
        self.counters[key] = ordinal
        episode_log.calls_used += 1
        simulated_ms = self._latency_ms(tool.server_id, ordinal)
        episode_log.simulated_ms_used += simulated_ms
        episode_log.record("execute", tool.ref)

        injected = self._failure_kind(tool.server_id, tool.name, ordinal)
        if injected is not None:
            raise ToolError(injected, f"{tool.ref} failed at call #{ordinal} ({injected})")

        handler = self.handlers.get(tool.server_id)
        if handler is None:
            raise ToolError("no_handler", f"no simulated server bound for {tool.server_id}")
        ctx = {"seed": self.seed, "scenario": self.scenario, "fabric": self, "ordinal": ordinal}
        payload = handler(tool.server_id, tool.name, call.params_dict, ordinal, ctx)

        serialized = canonical_json(payload)
        artifact_id = self.ledger.put_artifact(
            payload, parents=parents,
            producer=f"{role.value}:{tool.ref}",
            params=call.params_dict)
        summary = serialized
        if len(serialized) > budget.max_output_chars:
            summary = summarize_output(serialized, budget.max_output_chars)
        return ToolResult(
            status="ok",
            payload=payload,
            produced_artifacts=(artifact_id,),
            chars=len(serialized),
            summary=summary,
            simulated_ms=simulated_ms,
        )


def result_from_error(exc: Exception) -> ToolResult:
    """Normalize a raised dispatch error into a loggable result."""
    kind = getattr(exc, "kind", getattr(exc, "code", "error"))
    return ToolResult(status="error", error_kind=str(kind), error_message=str(exc))
