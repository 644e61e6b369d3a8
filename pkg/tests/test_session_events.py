"""Session-state plumbing: context cap enforcement, event subscriptions,
manifest directory override, workspace filesystem tools."""

import os

import pytest

from dualplane.events import SUBSCRIBER_QUEUE_MAX, EventBus
from dualplane.manifests import MANIFEST_DIR_ENV, default_manifest_dir, load_manifest_dir
from dualplane.session import TrajectoryRecorder
from dualplane.types import Action, AgentRole, digest_json


# ---------------------------------------------------------------------------
# context cap
# ---------------------------------------------------------------------------

def test_context_entries_capped_at_summarize_limit():
    recorder = TrajectoryRecorder("s", seed=0, context_cap=32_000, summarize_limit=400)
    recorder.add_context("tool", "paths /a/b.sdf plus score -7.5 " * 200)
    assert recorder.state.context[0].chars <= 400


def test_context_cap_squeezes_then_drops_oldest():
    recorder = TrajectoryRecorder("s", seed=0, context_cap=2_000, summarize_limit=600)
    for i in range(12):
        recorder.add_context("worker", f"block {i}: " + ("data point 42 " * 60))
    assert recorder.state.context_chars <= 2_000
    assert recorder.state.context, "context never empties entirely"
    # newest entry survives intact
    assert "block 11" in recorder.state.context[-1].text


def test_step_index_strictly_increases():
    recorder = TrajectoryRecorder("s", seed=0)
    seen = []
    for i in range(5):
        recorder.record(Action.thought(AgentRole.SUPERVISOR, f"t{i}"), digest_json(i))
        seen.append(recorder.state.step_index)
    assert seen == sorted(set(seen))


# ---------------------------------------------------------------------------
# event bus
# ---------------------------------------------------------------------------

def test_event_sequence_is_ordered_and_subscribable():
    bus = EventBus("s")
    for i in range(5):
        bus.emit("tick", {"i": i})
    sub = bus.subscribe(after_seq=2)
    got = sub.poll()
    assert [e["seq"] for e in got] == [3, 4, 5]
    bus.emit("tick", {"i": 99})
    assert [e["data"]["i"] for e in sub.poll()] == [99]


def test_slow_subscriber_gets_gap_marker_not_blocking():
    bus = EventBus("s")
    sub = bus.subscribe()
    for i in range(SUBSCRIBER_QUEUE_MAX + 50):
        bus.emit("tick", {"i": i})
    got = sub.poll()
    assert got[0]["kind"] == "gap"
    assert len(got) == SUBSCRIBER_QUEUE_MAX + 1
    # the bus itself kept everything
    assert len(bus.events) == SUBSCRIBER_QUEUE_MAX + 50


# ---------------------------------------------------------------------------
# manifest directory override
# ---------------------------------------------------------------------------

def test_manifest_env_override(tmp_path, monkeypatch):
    monkeypatch.setenv(MANIFEST_DIR_ENV, str(tmp_path))
    assert default_manifest_dir() == tmp_path
    from dualplane.errors import ManifestMissing
    with pytest.raises(ManifestMissing):
        load_manifest_dir(tmp_path / "missing")
    # an empty override directory simply loads no servers
    assert load_manifest_dir() == []


# ---------------------------------------------------------------------------
# workspace filesystem tools
# ---------------------------------------------------------------------------

def test_workspace_write_read_list(registry):
    from dualplane.fabric import EpisodeLog, InvocationBudget, ToolFabric
    from dualplane.ledger import ArtifactLedger
    from dualplane.params import validate_params
    from dualplane.servers import default_handlers
    from dualplane.types import PermissionPolicy

    fabric = ToolFabric(registry=registry, ledger=ArtifactLedger(session="ws"),
                        handlers=default_handlers())
    policy = PermissionPolicy.make("strict")
    budget = InvocationBudget()
    log = EpisodeLog(role=AgentRole.COMPUTATION_WORKER, require_discovery=False)

    def call(name, params):
        tool = registry.get_tool(f"workspace/{name}")
        return fabric.execute_tool(validate_params(params, tool),
                                   AgentRole.COMPUTATION_WORKER, policy, budget, log)

    write = call("write_file", {"path": "/poses/run1.sdf", "content": "MOL v2000"})
    assert write.payload == {"path": "/poses/run1.sdf", "bytes": 9}
    read = call("read_file", {"path": "/poses/run1.sdf"})
    assert read.payload["content"] == "MOL v2000"
    listing = call("list_dir", {"path": "/poses"})
    assert listing.payload["entries"] == ["/poses/run1.sdf"]
