"""Skill graph specification: declarative documents, parsing and validation.

A graph is data, not code: nodes (tool steps, transforms, gates, fanout,
join), typed edges, and explicitly bounded back-edges. ``build_graph``
rejects dangling edges, contract mismatches and unbounded cycles before
anything executes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .adapters import ContractEntry
from .errors import GraphValidationError

NODE_KINDS = ("tool_step", "transform", "gate", "fanout", "join")
FAILURE_POLICIES = ("abort_branch", "penalize_and_continue", "abort_run")


@dataclass(frozen=True)
class GateSpec:
    gate_id: str
    prompt: str
    editable: tuple[str, ...] = ()
    checkpoint: str = ""


@dataclass(frozen=True)
class NodeSpec:
    node_id: str
    kind: str
    tool: dict | None = None            # {"server","name","params"} for tool_step
    transform: str | None = None
    gate: GateSpec | None = None
    foreach: str | None = None
    params: dict = field(default_factory=dict)
    inputs: tuple[ContractEntry, ...] = ()
    outputs: tuple[ContractEntry, ...] = ()
    bind: dict = field(default_factory=dict)
    retry: int = 0
    on_failure: str = "abort_run"
    checkpoint: str | None = None

    @property
    def passthrough(self) -> bool:
        return self.kind in ("fanout", "join")

    def input_keys(self) -> list[str]:
        return [c.key for c in self.inputs]

    def output_keys(self) -> list[str]:
        return [c.key for c in self.outputs]


@dataclass(frozen=True)
class Edge:
    src: str
    dst: str
    key: str


@dataclass
class SkillGraph:
    name: str
    nodes: dict[str, NodeSpec]
    edges: list[Edge]
    entry: str
    exits: tuple[str, ...]
    cycle_bounds: dict[tuple[str, str], int]
    topo_index: dict[str, int] = field(default_factory=dict)

    def back_edges(self) -> set[tuple[str, str]]:
        return set(self.cycle_bounds)

    def forward_edges(self) -> list[Edge]:
        backs = self.back_edges()
        return [e for e in self.edges if (e.src, e.dst) not in backs]

    def in_edges(self, node_id: str) -> list[Edge]:
        return [e for e in self.edges if e.dst == node_id]

    def out_edges(self, node_id: str) -> list[Edge]:
        return [e for e in self.edges if e.src == node_id]

    def cycle_body(self, target: str, source: str) -> set[str]:
        """Nodes re-executed when the back-edge (source -> target) fires:
        forward-reachable from target intersected with forward-ancestors of
        source, plus both endpoints."""
        fwd = self.forward_edges()

        def reach(start: str, downstream: bool) -> set[str]:
            seen = {start}
            frontier = [start]
            while frontier:
                current = frontier.pop()
                for e in fwd:
                    nxt = None
                    if downstream and e.src == current:
                        nxt = e.dst
                    elif not downstream and e.dst == current:
                        nxt = e.src
                    if nxt and nxt not in seen:
                        seen.add(nxt)
                        frontier.append(nxt)
            return seen

        return (reach(target, True) & reach(source, False)) | {target, source}


def _topological_order(nodes: dict[str, NodeSpec], edges: list[Edge]) -> list[str] | None:
    indegree = {n: 0 for n in nodes}
    for e in edges:
        indegree[e.dst] += 1
    frontier = sorted(n for n, d in indegree.items() if d == 0)
    order: list[str] = []
    while frontier:
        current = frontier.pop(0)
        order.append(current)
        for e in sorted(edges, key=lambda e: (e.dst, e.key)):
            if e.src != current:
                continue
            indegree[e.dst] -= 1
            if indegree[e.dst] == 0 and e.dst not in order and e.dst not in frontier:
                frontier.append(e.dst)
        frontier.sort()
    if len(order) != len(nodes):
        return None
    return order


def _parse_node(node_id: str, data: dict) -> NodeSpec:
    kind = data.get("kind", "")
    if kind not in NODE_KINDS:
        raise GraphValidationError("contract_mismatch",
                                   f"node {node_id}: unknown kind {kind!r}")
    gate = None
    if kind == "gate":
        g = data.get("gate") or {}
        gate = GateSpec(
            gate_id=g.get("gate_id", node_id),
            prompt=g.get("prompt", ""),
            editable=tuple(g.get("editable", [])),
            checkpoint=g.get("checkpoint", f"gate-{g.get('gate_id', node_id)}"),
        )
    on_failure = data.get("on_failure", "abort_run")
    if on_failure not in FAILURE_POLICIES:
        raise GraphValidationError("contract_mismatch",
                                   f"node {node_id}: unknown failure policy {on_failure!r}")
    if kind == "gate" and on_failure != "abort_run":
        raise GraphValidationError("contract_mismatch",
                                   f"gate node {node_id} must abort the run on failure")
    inputs = tuple(ContractEntry.from_json(c) for c in data.get("inputs", []))
    outputs = tuple(ContractEntry.from_json(c) for c in data.get("outputs", []))
    if kind not in ("fanout", "join") and not (inputs or kind == "gate") and not outputs:
        raise GraphValidationError("contract_mismatch",
                                   f"node {node_id}: contracts must be non-empty")
    if kind not in ("fanout", "join") and (not inputs or not outputs):
        raise GraphValidationError("contract_mismatch",
                                   f"node {node_id}: contracts must be non-empty")
    retry = int(data.get("retry", 0))
    if retry < 0:
        raise GraphValidationError("contract_mismatch", f"node {node_id}: negative retry")
    return NodeSpec(
        node_id=node_id,
        kind=kind,
        tool=data.get("tool"),
        transform=data.get("transform"),
        gate=gate,
        foreach=data.get("foreach"),
        params=dict(data.get("params", {})),
        inputs=inputs,
        outputs=outputs,
        bind=dict(data.get("bind", {})),
        retry=retry,
        on_failure=on_failure,
        checkpoint=data.get("checkpoint"),
    )


def build_graph(document: dict | str | Path) -> SkillGraph:
    """Parse and validate a graph spec document (dict, JSON text, or path)."""
    if isinstance(document, Path):
        document = json.loads(document.read_text(encoding="utf-8"))
    elif isinstance(document, str):
        document = json.loads(document)

    nodes = {node_id: _parse_node(node_id, spec)
             for node_id, spec in document.get("nodes", {}).items()}
    edges = [Edge(src=e["from"], dst=e["to"], key=e["key"])
             for e in document.get("edges", [])]
    entry = document.get("entry", "")
    exits = tuple(document.get("exits", []))
    cycle_bounds: dict[tuple[str, str], int] = {}
    for cb in document.get("cycle_bounds", []):
        bound = int(cb["bound"])
        if bound < 1:
            raise GraphValidationError("unbounded_cycle",
                                       f"cycle bound for {cb['from']}->{cb['to']} must be >= 1")
        cycle_bounds[(cb["from"], cb["to"])] = bound

    # referential integrity
    if entry not in nodes:
        raise GraphValidationError("dangling_edge", f"entry node {entry!r} does not exist")
    for x in exits:
        if x not in nodes:
            raise GraphValidationError("dangling_edge", f"exit node {x!r} does not exist")
    for e in edges:
        if e.src not in nodes or e.dst not in nodes:
            raise GraphValidationError("dangling_edge",
                                       f"edge {e.src}->{e.dst} references a missing node")
    declared_edges = {(e.src, e.dst) for e in edges}
    for pair in cycle_bounds:
        if pair not in declared_edges:
            raise GraphValidationError("dangling_edge",
                                       f"cycle bound on undeclared edge {pair[0]}->{pair[1]}")

    # contract checks: every edge key must be produced and consumed
    for e in edges:
        producer = nodes[e.src]
        consumer = nodes[e.dst]
        if not producer.passthrough and e.key not in producer.output_keys():
            raise GraphValidationError(
                "contract_mismatch",
                f"edge {e.src}->{e.dst}: key {e.key!r} not in producer output contract")
        if not consumer.passthrough and e.key not in consumer.input_keys():
            raise GraphValidationError(
                "contract_mismatch",
                f"edge {e.src}->{e.dst}: key {e.key!r} not in consumer input contract")

    # acyclicity once bounded back-edges are removed
    backs = set(cycle_bounds)
    forward = [e for e in edges if (e.src, e.dst) not in backs]
    order = _topological_order(nodes, forward)
    if order is None:
        raise GraphValidationError("unbounded_cycle",
                                   "graph is cyclic after removing bounded back-edges")

    graph = SkillGraph(
        name=document.get("name", "graph"),
        nodes=nodes,
        edges=edges,
        entry=entry,
        exits=exits,
        cycle_bounds=cycle_bounds,
        topo_index={node_id: i for i, node_id in enumerate(order)},
    )
    return graph


def load_graph(name: str, directory: Path | None = None) -> SkillGraph:
    from importlib import resources
    if directory is not None:
        return build_graph(Path(directory) / f"{name}.graph")
    text = resources.files("dualplane").joinpath(f"data/graphs/{name}.graph").read_text("utf-8")
    return build_graph(text)
