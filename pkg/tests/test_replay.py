"""Trajectory replay: match on faithful re-execution, divergence on mutation."""

import json
from pathlib import Path

import pytest

from dualplane.engine import GatePolicy
from dualplane.replay import load_trajectory, replay
from dualplane.supervisor import run_supervisor
from dualplane.types import ActionKind, Trajectory


def run_fixture(make_session, query, seed=7, gate_policy=None):
    stores = make_session(query, seed=seed, gate_policy=gate_policy)
    run_supervisor(stores.query, stores)
    return stores


def test_empty_trajectory_matches_vacuously():
    verdict = replay(Trajectory(session_id="no-op", seed=0))
    assert verdict.match and verdict.steps_checked == 0


@pytest.mark.parametrize("scenario", ["crohns", "sepsis"])
def test_fixture_run_replays_to_match(make_session, queries, scenario):
    stores = run_fixture(make_session, queries[scenario])
    verdict = replay(stores.recorder.trajectory)
    assert verdict.match, verdict.detail
    assert verdict.steps_checked > 20


def test_replay_covers_injected_failures(make_session, queries):
    stores = run_fixture(make_session, queries["sepsis"])
    trajectory = stores.recorder.trajectory
    dock_errors = [r for r in trajectory.records
                   if r.action.kind is ActionKind.TOOL_CALL
                   and r.action.tool_ref == "docking/dock_molecule"]
    assert len(dock_errors) >= 20
    assert replay(trajectory).match


def test_mutated_fixture_diverges_at_first_affected_step(make_session, queries,
                                                         tmp_path):
    stores = run_fixture(make_session, queries["crohns"])
    trajectory = stores.recorder.trajectory

    # clone the scenario fixtures with one perturbed pinned value
    from dualplane.scenarios import default_scenario_dir
    mutated_dir = tmp_path / "scenarios"
    mutated_dir.mkdir()
    for path in Path(default_scenario_dir()).glob("*.json"):
        data = json.loads(path.read_text())
        if data["id"] == "crohns":
            winner = "Cc1cc2nc(N[C@H]3CCNCC3=O)cnc2cc1C(=O)O"
            data["docking"]["pinned"][winner] = -8.95
        (mutated_dir / path.name).write_text(json.dumps(data))

    verdict = replay(trajectory, scenario_dir=mutated_dir)
    assert not verdict.match

    # the first affected record is the winner's first docking call
    expected = None
    for index, record in enumerate(trajectory.records):
        if (record.action.kind is ActionKind.TOOL_CALL
                and record.action.tool_ref == "docking/dock_molecule"
                and record.action.params_dict.get("smiles", "").startswith("Cc1cc2nc")):
            expected = index
            break
    assert expected is not None
    assert verdict.divergence_step == expected


def test_replay_roundtrips_through_file(make_session, queries, tmp_path):
    stores = run_fixture(make_session, queries["crohns"])
    path = tmp_path / "trajectory.json"
    path.write_text(json.dumps(stores.recorder.trajectory.to_json()))
    verdict = replay(load_trajectory(path))
    assert verdict.match


def test_replay_matches_after_rollback_run(make_session, queries):
    script = [{"gate_id": "hit-confirm", "decision": "rollback",
               "checkpoint_label": "after-pocket-detection"}]
    stores = run_fixture(make_session, queries["crohns"],
                         gate_policy=GatePolicy.scripted(script))
    verdict = replay(stores.recorder.trajectory)
    assert verdict.match, f"diverged at {verdict.divergence_step}: {verdict.detail}"


def test_clean_strict_run_replays_compliant(make_session, queries):
    """A strict-mode run with an empty compliance record never holds a tool
    call outside the caller's grants."""
    from dualplane.replay import verify_compliance
    from dualplane.types import PermissionPolicy

    stores = run_fixture(make_session, queries["crohns"])
    trajectory = stores.recorder.trajectory
    assert trajectory.compliance_violations == []
    assert verify_compliance(trajectory, PermissionPolicy.make("strict")) == []
