"""Shared domain types: state, tools, actions, permissions, trajectories.

These are immutable values (frozen dataclasses and closed enums) that every
other module imports. Mutation happens only behind the ledger and the
workflow-plane stores, which serialize writes per session, so instances here
are safe to share across concurrent executors.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

Digest = str

RESERVED_DIGEST_WIDTH = 64  # sha256 hex


def canonical_json(value: Any) -> str:
    """Serialize a JSON-able value deterministically (sorted keys, no spaces)."""
    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def digest(content: bytes | str) -> Digest:
    """Content digest: sha256 hex of the raw bytes (UTF-8 for text).

    Equal inputs always produce equal digests; the empty input is stable
    across runs.
    """
    if isinstance(content, str):
        content = content.encode("utf-8")
    return hashlib.sha256(content).hexdigest()


def digest_json(value: Any) -> Digest:
    """Digest of the canonical JSON serialization of ``value``."""
    return digest(canonical_json(value))


class ToolCategory(str, Enum):
    SEARCH = "search"
    COMPUTATION = "computation"
    FILESYSTEM = "filesystem"


ALL_CATEGORIES = frozenset(ToolCategory)


class CostClass(str, Enum):
    READ = "read"
    COMPUTE = "compute"
    WRITE = "write"


class AgentRole(str, Enum):
    SUPERVISOR = "Supervisor"
    RESEARCH_WORKER = "ResearchWorker"
    COMPUTATION_WORKER = "ComputationWorker"
    REPORTER = "Reporter"


@dataclass(frozen=True)
class ParamSpec:
    """One entry of a tool's parameter schema."""

    name: str
    semantic_type: str
    required: bool = True
    default: Any = None


@dataclass(frozen=True)
class ToolDescriptor:
    """Federated tool metadata; (server_id, name) is globally unique per registry."""

    name: str
    server_id: str
    category: ToolCategory
    cost_class: CostClass
    param_schema: tuple[ParamSpec, ...] = ()
    side_effects: bool = False
    description: str = ""

    def __post_init__(self) -> None:
        # write-class tools always have side effects
        if self.cost_class is CostClass.WRITE and not self.side_effects:
            raise ValueError(f"tool {self.name}: cost_class=write requires side_effects")

    @property
    def ref(self) -> str:
        return f"{self.server_id}/{self.name}"

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "server_id": self.server_id,
            "category": self.category.value,
            "cost_class": self.cost_class.value,
            "side_effects": self.side_effects,
            "description": self.description,
            "params": [
                {
                    "name": p.name,
                    "type": p.semantic_type,
                    "required": p.required,
                    "default": p.default,
                }
                for p in self.param_schema
            ],
        }

    @classmethod
    def from_json(cls, data: dict, server_id: str, category: ToolCategory) -> "ToolDescriptor":
        params = tuple(
            ParamSpec(
                name=p["name"],
                semantic_type=p["type"],
                required=p.get("required", True),
                default=p.get("default"),
            )
            for p in data.get("params", [])
        )
        return cls(
            name=data["name"],
            server_id=server_id,
            category=category,
            cost_class=CostClass(data.get("cost_class", "read")),
            param_schema=params,
            side_effects=data.get("side_effects", False),
            description=data.get("description", ""),
        )


class ActionKind(str, Enum):
    THOUGHT = "thought"
    TOOL_CALL = "tool_call"
    TERMINATE = "terminate"


@dataclass(frozen=True)
class Action:
    """One step taken by an agent: a thought, a tool call, or termination."""

    kind: ActionKind
    issued_by: AgentRole
    step: int = 0
    text: str = ""
    tool_ref: str = ""
    params: tuple[tuple[str, Any], ...] = ()

    @classmethod
    def thought(cls, role: AgentRole, text: str, step: int = 0) -> "Action":
        return cls(kind=ActionKind.THOUGHT, issued_by=role, text=text, step=step)

    @classmethod
    def tool_call(cls, role: AgentRole, tool_ref: str, params: dict, step: int = 0) -> "Action":
        items = tuple(sorted(params.items(), key=lambda kv: kv[0]))
        return cls(kind=ActionKind.TOOL_CALL, issued_by=role, tool_ref=tool_ref, params=items, step=step)

    @classmethod
    def terminate(cls, role: AgentRole, reason: str, step: int = 0) -> "Action":
        return cls(kind=ActionKind.TERMINATE, issued_by=role, text=reason, step=step)

    @property
    def params_dict(self) -> dict:
        return dict(self.params)

    def to_json(self) -> dict:
        data: dict[str, Any] = {
            "kind": self.kind.value,
            "issued_by": self.issued_by.value,
            "step": self.step,
        }
        if self.kind is ActionKind.TOOL_CALL:
            data["tool_ref"] = self.tool_ref
            data["params"] = dict(self.params)
        else:
            data["text"] = self.text
        return data

    @classmethod
    def from_json(cls, data: dict) -> "Action":
        kind = ActionKind(data["kind"])
        role = AgentRole(data["issued_by"])
        if kind is ActionKind.TOOL_CALL:
            return cls.tool_call(role, data["tool_ref"], data.get("params", {}), data.get("step", 0))
        if kind is ActionKind.THOUGHT:
            return cls.thought(role, data.get("text", ""), data.get("step", 0))
        return cls.terminate(role, data.get("text", ""), data.get("step", 0))


class PolicyMode(str, Enum):
    STRICT = "strict"
    PERMISSIVE = "permissive"


#: Default role grants: research stays on search, computation gets the
#: expensive categories, the reporter only synthesizes.
DEFAULT_ROLE_GRANTS: dict[AgentRole, frozenset[ToolCategory]] = {
    AgentRole.SUPERVISOR: frozenset({ToolCategory.SEARCH}),
    AgentRole.RESEARCH_WORKER: frozenset({ToolCategory.SEARCH}),
    AgentRole.COMPUTATION_WORKER: frozenset({ToolCategory.COMPUTATION, ToolCategory.FILESYSTEM}),
    AgentRole.REPORTER: frozenset(),
}


@dataclass(frozen=True)
class PermissionPolicy:
    """Role-based tool governance.

    In permissive mode every role sees every category; in strict mode a
    role's visible tools are exactly those whose category is granted.
    """

    mode: PolicyMode = PolicyMode.STRICT
    role_grants: tuple[tuple[AgentRole, frozenset[ToolCategory]], ...] = tuple(
        sorted(DEFAULT_ROLE_GRANTS.items(), key=lambda kv: kv[0].value)
    )

    @classmethod
    def make(cls, mode: PolicyMode | str = PolicyMode.STRICT,
             grants: dict[AgentRole, frozenset[ToolCategory]] | None = None) -> "PermissionPolicy":
        mode = PolicyMode(mode)
        table = dict(DEFAULT_ROLE_GRANTS)
        if grants:
            table.update(grants)
        return cls(mode=mode, role_grants=tuple(sorted(table.items(), key=lambda kv: kv[0].value)))

    @property
    def grants(self) -> dict[AgentRole, frozenset[ToolCategory]]:
        return dict(self.role_grants)

    def effective_grants(self, role: AgentRole) -> frozenset[ToolCategory]:
        if self.mode is PolicyMode.PERMISSIVE:
            return ALL_CATEGORIES
        return self.grants.get(role, frozenset())

    def allows(self, role: AgentRole, category: ToolCategory) -> bool:
        return category in self.effective_grants(role)

    def to_json(self) -> dict:
        return {
            "mode": self.mode.value,
            "role_grants": {
                role.value: sorted(cat.value for cat in cats)
                for role, cats in self.role_grants
            },
        }

    @classmethod
    def from_json(cls, data: dict) -> "PermissionPolicy":
        grants = {
            AgentRole(role): frozenset(ToolCategory(c) for c in cats)
            for role, cats in data.get("role_grants", {}).items()
        }
        return cls.make(data.get("mode", "strict"), grants)


@dataclass
class ContextEntry:
    """Role-tagged text summary living in a hybrid state's reasoning context."""

    role: str
    text: str

    @property
    def chars(self) -> int:
        return len(self.text)


@dataclass
class HybridState:
    """The pair of reasoning context and artifact references for a session.

    ``step_index`` strictly increases across recorded transitions; the total
    context size is kept under ``context_cap`` by the owning recorder.
    """

    session_id: str
    context: list[ContextEntry] = field(default_factory=list)
    artifacts: set[str] = field(default_factory=set)
    step_index: int = 0

    @property
    def context_chars(self) -> int:
        return sum(e.chars for e in self.context)

    def state_digest(self) -> Digest:
        return digest_json({
            "session": self.session_id,
            "step": self.step_index,
            "context": [[e.role, digest(e.text)] for e in self.context],
            "artifacts": sorted(self.artifacts),
        })


@dataclass(frozen=True)
class TrajectoryRecord:
    """One audited transition; ``wall_ms`` is informational and excluded
    from all digests so replays compare clean."""

    state_digest: Digest
    action: Action
    result_digest: Digest
    wall_ms: float = 0.0

    def to_json(self) -> dict:
        return {
            "state_digest": self.state_digest,
            "action": self.action.to_json(),
            "result_digest": self.result_digest,
            "wall_ms": round(self.wall_ms, 3),
        }

    @classmethod
    def from_json(cls, data: dict) -> "TrajectoryRecord":
        return cls(
            state_digest=data["state_digest"],
            action=Action.from_json(data["action"]),
            result_digest=data["result_digest"],
            wall_ms=data.get("wall_ms", 0.0),
        )


@dataclass
class Trajectory:
    """Append-only audit log of a session run."""

    session_id: str
    seed: int
    records: list[TrajectoryRecord] = field(default_factory=list)
    final_synthesis: str = ""
    compliance_violations: list[dict] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def append(self, record: TrajectoryRecord) -> None:
        self.records.append(record)

    def digest_sequence(self) -> list[Digest]:
        out: list[Digest] = []
        for r in self.records:
            out.append(r.state_digest)
            out.append(r.result_digest)
        return out

    def to_json(self) -> dict:
        return {
            "session_id": self.session_id,
            "seed": self.seed,
            "records": [r.to_json() for r in self.records],
            "final_synthesis": self.final_synthesis,
            "compliance_violations": self.compliance_violations,
            "notes": self.notes,
            "meta": self.meta,
        }

    @classmethod
    def from_json(cls, data: dict) -> "Trajectory":
        return cls(
            session_id=data["session_id"],
            seed=data["seed"],
            records=[TrajectoryRecord.from_json(r) for r in data.get("records", [])],
            final_synthesis=data.get("final_synthesis", ""),
            compliance_violations=list(data.get("compliance_violations", [])),
            notes=list(data.get("notes", [])),
            meta=dict(data.get("meta", {})),
        )
