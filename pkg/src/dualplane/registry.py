"""Federated tool registry with governance-filtered discovery."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .errors import DuplicateServer
from .manifests import ServerManifest
from .types import AgentRole, PermissionPolicy, ToolCategory, ToolDescriptor

_TOKEN_RE = re.compile(r"\w+")


def _tokens(text: str) -> frozenset[str]:
    return frozenset(t.lower() for t in _TOKEN_RE.findall(text))


@dataclass
class ToolRegistry:
    """Read-mostly registry; safe for concurrent reads once populated.

    Query results never depend on registration order: listings and searches
    sort on (server_id, name)."""

    manifests: dict[str, ServerManifest] = field(default_factory=dict)
    _search_tokens: dict[str, frozenset[str]] = field(default_factory=dict)

    def register(self, manifest: ServerManifest) -> "ToolRegistry":
        if manifest.server_id in self.manifests:
            raise DuplicateServer(manifest.server_id)
        self.manifests[manifest.server_id] = manifest
        for tool in manifest.tools:
            self._search_tokens[tool.ref] = _tokens(
                f"{tool.name} {tool.description} {tool.server_id} {tool.category.value}")
        return self

    def all_tools(self) -> list[ToolDescriptor]:
        tools = [t for m in self.manifests.values() for t in m.tools]
        return sorted(tools, key=lambda t: (t.server_id, t.name))

    def get_tool(self, ref: str) -> ToolDescriptor | None:
        server_id, _, name = ref.partition("/")
        manifest = self.manifests.get(server_id)
        if not manifest:
            return None
        for tool in manifest.tools:
            if tool.name == name:
                return tool
        return None

    def list_by_category(self, category: ToolCategory) -> list[ToolDescriptor]:
        return [t for t in self.all_tools() if t.category is category]

    def visible_tools(self, role: AgentRole, policy: PermissionPolicy) -> list[ToolDescriptor]:
        grants = policy.effective_grants(role)
        return [t for t in self.all_tools() if t.category in grants]


def register_server(manifest: ServerManifest, registry: ToolRegistry) -> ToolRegistry:
    """Add a server's tools to the registry; duplicate server ids are rejected."""
    return registry.register(manifest)


def tool_search(query: str, role: AgentRole, policy: PermissionPolicy,
                registry: ToolRegistry) -> list[ToolDescriptor]:
    """Keyword discovery over the governance-filtered tool list.

    Ranking is deterministic: case-insensitive token-overlap count
    descending, then server_id, then name. Tools with zero overlap are
    omitted; an empty result is valid.
    """
    query_tokens = _tokens(query)
    scored: list[tuple[int, ToolDescriptor]] = []
    for tool in registry.visible_tools(role, policy):
        overlap = len(query_tokens & registry._search_tokens.get(tool.ref, frozenset()))
        if overlap > 0:
            scored.append((overlap, tool))
    scored.sort(key=lambda item: (-item[0], item[1].server_id, item[1].name))
    return [tool for _, tool in scored]
