"""Server manifests: the file contract of the tool federation boundary.

One JSON document per server declares its identity, category, tools and
deterministic latency/failure behavior. Manifests are loaded from a
directory at startup; the MOZI_MANIFEST_DIR environment variable overrides
the default location.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import ManifestMissing
from .types import ToolCategory, ToolDescriptor

MANIFEST_DIR_ENV = "MOZI_MANIFEST_DIR"


@dataclass(frozen=True)
class FailureRule:
    """Injected failure for one tool at one call ordinal (1-based)."""

    tool: str
    ordinal: int
    kind: str

    def __post_init__(self) -> None:
        if self.ordinal < 1:
            raise ValueError("failure ordinals are 1-based and positive")


@dataclass(frozen=True)
class LatencyModel:
    base_ms: int = 0
    jitter_seed: int = 0


@dataclass(frozen=True)
class ServerManifest:
    server_id: str
    category: ToolCategory
    tools: tuple[ToolDescriptor, ...] = ()
    latency: LatencyModel = field(default_factory=LatencyModel)
    failure_plan: tuple[FailureRule, ...] = ()

    def __post_init__(self) -> None:
        for tool in self.tools:
            if tool.server_id != self.server_id or tool.category != self.category:
                raise ValueError(
                    f"tool {tool.name} does not carry manifest identity "
                    f"{self.server_id}/{self.category.value}")
        seen: set[tuple[str, int]] = set()
        for rule in self.failure_plan:
            key = (rule.tool, rule.ordinal)
            if key in seen:
                raise ValueError(f"duplicate failure ordinal {key}")
            seen.add(key)

    def to_json(self) -> dict:
        return {
            "server_id": self.server_id,
            "category": self.category.value,
            "latency_model": {"base_ms": self.latency.base_ms,
                              "jitter_seed": self.latency.jitter_seed},
            "failure_plan": [
                {"tool": r.tool, "ordinal": r.ordinal, "kind": r.kind}
                for r in self.failure_plan
            ],
            "tools": [t.to_json() for t in self.tools],
        }

    @classmethod
    def from_json(cls, data: dict) -> "ServerManifest":
        category = ToolCategory(data["category"])
        server_id = data["server_id"]
        tools = tuple(
            ToolDescriptor.from_json(t, server_id=server_id, category=category)
            for t in data.get("tools", [])
        )
        lat = data.get("latency_model", {})
        plan = tuple(
            FailureRule(tool=r["tool"], ordinal=r["ordinal"], kind=r["kind"])
            for r in data.get("failure_plan", [])
        )
        return cls(
            server_id=server_id,
            category=category,
            tools=tools,
            latency=LatencyModel(base_ms=lat.get("base_ms", 0),
                                 jitter_seed=lat.get("jitter_seed", 0)),
            failure_plan=plan,
        )


def load_manifest(path: Path | str) -> ServerManifest:
    path = Path(path)
    if not path.exists():
        raise ManifestMissing(str(path))
    return ServerManifest.from_json(json.loads(path.read_text(encoding="utf-8")))


def default_manifest_dir() -> Path:
    override = os.environ.get(MANIFEST_DIR_ENV)
    if override:
        return Path(override)
    return Path(str(resources.files("dualplane").joinpath("data/manifests")))


def load_manifest_dir(directory: Path | str | None = None) -> list[ServerManifest]:
    """Load every ``*.json`` manifest in ``directory`` (sorted by filename)."""
    directory = Path(directory) if directory else default_manifest_dir()
    if not directory.is_dir():
        raise ManifestMissing(f"manifest directory not found: {directory}")
    manifests = []
    for path in sorted(directory.glob("*.json")):
        manifests.append(load_manifest(path))
    return manifests
