"""Acceptance suite: every release criterion at its stated tolerance.

Each criterion prints one PASS/FAIL line (run with ``pytest -s`` to see them
inline; they also appear in captured output on failure).
"""

import functools
import itertools
import json
import random
import time
from pathlib import Path

import pytest

from _oracles import oracle_cluster, oracle_fuse, random_molecules
from dualplane.bench import smape
from dualplane.engine import GatePolicy
from dualplane.errors import (AlternationViolation, PermissionDenied,
                              TicketAlreadyResolved)
from dualplane.fabric import EpisodeLog, InvocationBudget, ToolFabric, alternation_guard
from dualplane.ledger import ArtifactLedger
from dualplane.manifests import load_manifest_dir
from dualplane.molecules import cluster_representatives, fuse_and_rerank
from dualplane.params import validate_params
from dualplane.reasoner import Mode, Plan, PlanStep, ReflectDecision
from dualplane.registry import ToolRegistry
from dualplane.replay import replay
from dualplane.servers import default_handlers
from dualplane.session import SessionConfig, create_session
from dualplane.supervisor import run_supervisor
from dualplane.types import (ActionKind, AgentRole, PermissionPolicy,
                             ToolCategory)


def criterion(label):
    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"FAIL  [acceptance] {label}")
                raise
            print(f"PASS  [acceptance] {label}")
        return run
    return wrap


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

SAMPLE_VALUES = {
    "string": "alpha",
    "integer": 3,
    "float": 0.25,
    "boolean": True,
    "path": "/workspace/sample.txt",
    "smiles": "CCO",
    "pdb_id": "3V4V",
    "coordinates3": [1.0, 2.0, 3.0],
    "record": {"center": [0.0, 0.0, 0.0], "box": [20.0, 20.0, 20.0],
               "members": [], "iteration": 0},
    "list-of-smiles": ["CCO", "CCN"],
    "list-of-record": [{"smiles": "CCO"}],
}


def sample_params(tool):
    params = {}
    for spec in tool.param_schema:
        if spec.required:
            if spec.name == "content":
                params[spec.name] = "sample content"
            else:
                params[spec.name] = SAMPLE_VALUES[spec.semantic_type]
    return params


def full_run(query, seed=7, gate_policy=None, mode="strict"):
    from dualplane.cli import default_reasoner
    config = SessionConfig(seed=seed, policy=PermissionPolicy.make(mode),
                           gate_policy=gate_policy or GatePolicy.auto())
    stores = create_session(query, config, reasoner=default_reasoner())
    outcome = run_supervisor(stores.query, stores)
    return stores, outcome


CROHNS = "Design a drug for Crohn's disease"
SEPSIS = "Develop a therapeutic candidate for sepsis"
PARKINSONS = "Design a novel drug for Parkinson's disease"


# ---------------------------------------------------------------------------
# 1. governance soundness
# ---------------------------------------------------------------------------

@criterion("governance soundness: 1,000 randomized invocations, zero mis-decisions, < 5 s")
def test_governance_soundness():
    registry = ToolRegistry()
    for manifest in load_manifest_dir():
        registry.register(manifest)
    tools = registry.all_tools()
    fabric = ToolFabric(registry=registry, ledger=ArtifactLedger(session="gov"),
                        handlers=default_handlers())
    fabric.workspace["/workspace/sample.txt"] = "seed file"
    budget = InvocationBudget(max_calls_per_episode=10 ** 6, max_wall_ms=10 ** 9)
    rng = random.Random(20260810)
    roles = list(AgentRole)
    started = time.perf_counter()
    for _ in range(1_000):
        role = rng.choice(roles)
        tool = rng.choice(tools)
        policy = PermissionPolicy.make(rng.choice(["strict", "permissive"]))
        expected_allow = policy.allows(role, tool.category)
        call = validate_params(sample_params(tool), tool)
        log = EpisodeLog(role=role, require_discovery=False)
        try:
            fabric.execute_tool(call, role, policy, budget, log)
            dispatched = True
        except PermissionDenied:
            dispatched = False
        assert dispatched == expected_allow, (role, tool.ref, policy.mode)
    elapsed = time.perf_counter() - started
    assert elapsed < 5.0, f"{elapsed:.2f}s"


# ---------------------------------------------------------------------------
# 2. supervisor termination
# ---------------------------------------------------------------------------

class AlwaysReplan:
    def __init__(self, k, rng):
        self.k = k
        self.rng = rng

    def classify(self, query):
        return Mode.COMPLEX

    def plan(self, query, budget_k):
        n = max(1, min(self.rng.randint(1, 2 * self.k), budget_k))
        return Plan(steps=[self._step(f"p{i}") for i in range(n)], budget_k=budget_k)

    def reflect(self, query, completed, remaining):
        return ReflectDecision.replan(
            [self._step(f"r{i}") for i in range(self.rng.randint(1, 2 * self.k))])

    def synthesize(self, query, completed):
        return "adversarial synthesis"

    def worker_step(self, task, visible_tools, context):
        return None

    @staticmethod
    def _step(tag):
        return PlanStep(description=tag, role=AgentRole.RESEARCH_WORKER,
                        required_categories=frozenset({ToolCategory.SEARCH}),
                        script=("[]",))


@criterion("supervisor termination: 200 adversarial reasoners bounded by K*(1+R_max); "
           "direct=0 and simple=1 episodes")
def test_supervisor_termination():
    rng = random.Random(99)
    for _ in range(200):
        k = rng.randint(1, 6)
        r_max = rng.randint(0, 3)
        config = SessionConfig(seed=0, budget_k=k, replan_max=r_max)
        stores = create_session("adversarial stress", config,
                                reasoner=AlwaysReplan(k, rng))
        outcome = run_supervisor(stores.query, stores)
        assert outcome.worker_episodes <= k * (1 + r_max)
        assert outcome.status == "completed"
    _, direct = full_run("What is the mechanism of vedolizumab?")
    assert direct.mode == "direct" and direct.worker_episodes == 0
    _, simple = full_run("Dock this ligand into PDB 3V4V")
    assert simple.mode == "simple" and simple.worker_episodes == 1


# ---------------------------------------------------------------------------
# 3. execution-trace reproduction
# ---------------------------------------------------------------------------

@criterion("trace reproduction: pinned counts and scores for all three fixture runs, < 60 s each")
def test_trace_reproduction():
    t0 = time.perf_counter()
    _, crohns = full_run(CROHNS)
    t_crohns = time.perf_counter() - t0
    m = crohns.report["metrics"]
    assert m["ti"]["targets_retrieved"] == 25
    assert m["ti"]["structure"] == "3V4V"
    assert m["hi"]["pockets"] == 42
    assert m["hi"]["generated"] == 49
    assert m["hi"]["representatives"] == 20
    assert m["hi"]["dock_failures"] == 3
    assert m["hi"]["top_dock"] == -9.0
    assert m["lo"]["winner_dock"] == -8.8
    assert t_crohns < 60.0

    t0 = time.perf_counter()
    _, sepsis = full_run(SEPSIS)
    t_sepsis = time.perf_counter() - t0
    m = sepsis.report["metrics"]
    assert m["hi"]["pockets"] == 19
    assert m["hi"]["generated"] == 48
    assert m["hi"]["dock_failures"] == 7
    assert m["hi"]["top_dock"] == -8.7
    # final validation: two dock failures and two zero-score anomalies ranked
    # below every success, winner pinned
    assert m["lo"]["dock_failures"] == 2
    assert m["lo"]["zero_score_anomalies"] == 2
    assert m["lo"]["winner_dock"] == -8.4
    assert m["lo"]["winner_qed"] == 0.944
    assert m["lo"]["winner_sas"] == 1.0
    assert t_sepsis < 60.0

    t0 = time.perf_counter()
    _, parkinsons = full_run(PARKINSONS)
    t_parkinsons = time.perf_counter() - t0
    m = parkinsons.report["metrics"]
    assert m["hi"]["screened"] == 377_760
    assert m["hi"]["top_dti"] == 0.972
    assert t_parkinsons < 60.0


# ---------------------------------------------------------------------------
# 4. failure containment
# ---------------------------------------------------------------------------

@criterion("failure containment: 50 random injection plans — run completes, "
           "counts exact, failed items never ranked")
def test_failure_containment():
    rng = random.Random(4242)
    for trial in range(50):
        ordinals = sorted(rng.sample(range(1, 21), rng.randint(0, 10)))
        from dualplane.cli import default_reasoner
        stores = create_session(CROHNS, SessionConfig(seed=7),
                                reasoner=default_reasoner())
        stores.fabric.extra_failures = {
            ("docking", "dock_molecule"): {o: "engine_crash" for o in ordinals}}
        outcome = run_supervisor(stores.query, stores)
        assert outcome.status == "completed", (trial, ordinals)
        failures = outcome.report.get("failures", [])
        assert len(failures) == len(ordinals), (trial, ordinals)
        assert all(f["penalty_applied"] for f in failures)
        failed_smiles = {f["item_ref"] for f in failures}
        hit_smiles = {h["smiles"] for h in stores.blackboard["hits"]}
        candidate_smiles = {c["smiles"] for c in stores.blackboard["ranked_candidates"]}
        assert failed_smiles.isdisjoint(hit_smiles)
        assert failed_smiles.isdisjoint(candidate_smiles)


# ---------------------------------------------------------------------------
# 5. replay determinism
# ---------------------------------------------------------------------------

@criterion("replay determinism: fixture runs replay to match; a mutated fixture "
           "value diverges at the exact step")
def test_replay_determinism(tmp_path):
    for query in (CROHNS, SEPSIS, PARKINSONS):
        stores, _ = full_run(query)
        verdict = replay(stores.recorder.trajectory)
        assert verdict.match, (query, verdict.divergence_step)

    stores, _ = full_run(CROHNS)
    trajectory = stores.recorder.trajectory
    from dualplane.scenarios import default_scenario_dir
    mutated = tmp_path / "scenarios"
    mutated.mkdir()
    winner = "Cc1cc2nc(N[C@H]3CCNCC3=O)cnc2cc1C(=O)O"
    for path in Path(default_scenario_dir()).glob("*.json"):
        data = json.loads(path.read_text())
        if data["id"] == "crohns":
            data["docking"]["pinned"][winner] = -8.95
        (mutated / path.name).write_text(json.dumps(data))
    verdict = replay(trajectory, scenario_dir=mutated)
    expected = next(i for i, r in enumerate(trajectory.records)
                    if r.action.kind is ActionKind.TOOL_CALL
                    and r.action.tool_ref == "docking/dock_molecule"
                    and r.action.params_dict.get("smiles") == winner)
    assert not verdict.match
    assert verdict.divergence_step == expected


# ---------------------------------------------------------------------------
# 6. HITL semantics
# ---------------------------------------------------------------------------

@criterion("HITL semantics: approve==auto digests; correction changes only the "
           "downstream branch; rollback restores exactly; double resolution rejected")
def test_hitl_semantics():
    gates = ("target-confirm", "structure-select", "pocket-confirm",
             "hit-confirm", "lead-confirm")
    _, auto = full_run(CROHNS, seed=11)
    _, scripted = full_run(CROHNS, seed=11, gate_policy=GatePolicy.scripted(
        [{"gate_id": g, "decision": "approve"} for g in gates]))
    assert auto.report["stage_digests"] == scripted.report["stage_digests"]

    patch = {"pocket": {"center": [161.2, 205.8, 151.3], "box": [17.5, 24.7, 28.0],
                        "confidence": 1.0, "source": "reference_ligand"}}
    _, corrected = full_run(CROHNS, seed=11, gate_policy=GatePolicy.scripted(
        [{"gate_id": "pocket-confirm", "decision": "correct", "patch": patch}]))
    assert auto.report["stage_digests"]["ti"] == corrected.report["stage_digests"]["ti"]
    assert (auto.report["stage_digests"]["hi"]["pocket-detect"]
            == corrected.report["stage_digests"]["hi"]["pocket-detect"])
    for node in ("pocket-gate", "generate", "fuse", "dock", "rank-hits"):
        assert (auto.report["stage_digests"]["hi"][node]
                != corrected.report["stage_digests"]["hi"][node]), node

    # rollback restores the snapshot exactly (the engine self-verifies and
    # aborts on mismatch) and the rerun matches the clean run bit for bit
    rolled_stores, rolled = full_run(CROHNS, seed=11, gate_policy=GatePolicy.scripted(
        [{"gate_id": "hit-confirm", "decision": "rollback",
          "checkpoint_label": "after-pocket-detection"}]))
    assert rolled.status == "completed"
    assert any(t.status == "rolled_back" for t in rolled_stores.gatebook.all())
    assert rolled.report["stage_digests"] == auto.report["stage_digests"]

    # double resolution
    from dualplane.engine import execute_graph, resolve_gate
    from dualplane.graphspec import load_graph
    from dualplane.cli import default_reasoner
    config = SessionConfig(seed=11, gate_policy=GatePolicy.interactive(block=False))
    stores = create_session(CROHNS, config, reasoner=default_reasoner())
    ctx = stores.run_ctx(AgentRole.RESEARCH_WORKER)
    result = execute_graph(load_graph("ti"), {"disease": stores.query}, ctx,
                           input_refs={"disease": stores.input_ref})
    ticket = result.pending_tickets[0]
    resolve_gate(ticket.ticket_id, "approve", stores.gatebook)
    with pytest.raises(TicketAlreadyResolved):
        resolve_gate(ticket.ticket_id, "approve", stores.gatebook)


# ---------------------------------------------------------------------------
# 7. provenance completeness
# ---------------------------------------------------------------------------

@criterion("provenance completeness: every emitted artifact recorded, lineage "
           "acyclic, final candidate traces to the disease input")
def test_provenance_completeness():
    for query in (CROHNS, SEPSIS, PARKINSONS):
        stores, outcome = full_run(query)
        assert outcome.status == "completed"
        missing = [a for a in stores.recorder.state.artifacts
                   if not stores.ledger.has(a)]
        assert not missing
        assert stores.ledger.verify_acyclic()
        winner_ref = stores.blackboard_refs["winner"]
        ancestors = {r.artifact_id for r in stores.ledger.lineage(winner_ref)}
        assert stores.input_ref in ancestors


# ---------------------------------------------------------------------------
# 8. fusion / clustering oracle equivalence
# ---------------------------------------------------------------------------

@criterion("fusion and clustering match brute-force references on 100 random "
           "instances, bit-exact ordering")
def test_fusion_clustering_oracles():
    rng = random.Random(777)
    for _ in range(100):
        a = random_molecules(rng, rng.randint(0, 100))
        b = random_molecules(rng, rng.randint(0, 100))
        fused = fuse_and_rerank(a, b)
        got = [(m.smiles, round(m.primary_score(), 12), tuple(m.provenance))
               for m in fused]
        assert got == oracle_fuse(a, b)
    for _ in range(100):
        mols = random_molecules(rng, rng.randint(1, 50))
        threshold = rng.choice([0.3, 0.45, 0.6, 0.75])
        k = rng.randint(1, 15)
        got = [m.smiles for m in cluster_representatives(mols, threshold, k)]
        assert got == oracle_cluster(mols, threshold, k)


# ---------------------------------------------------------------------------
# 9. metric protocol
# ---------------------------------------------------------------------------

@criterion("metrics: smape to 1e-9 on the oracle suite, symmetry and [0,2] "
           "bounds on 1,000 random vectors, fraction-style rendering")
def test_metric_protocol():
    hand_cases = [
        (([1.0], [1.0]), 0.0),
        (([1.0], [3.0]), 1.0),
        (([0.0], [0.0]), 0.0),
        (([2.0, -4.0, 0.5], [1.0, -5.0, 0.5]), (2 / 3 + 2 / 9 + 0.0) / 3),
        (([10.0, 0.0], [0.0, 0.0]), (2.0 + 0.0) / 2),
    ]
    for (gold, pred), expected in hand_cases:
        assert abs(smape(gold, pred) - expected) <= 1e-9

    rng = random.Random(31337)
    for _ in range(1_000):
        n = rng.randint(1, 24)
        gold = [rng.uniform(-1e5, 1e5) for _ in range(n)]
        pred = [rng.uniform(-1e5, 1e5) for _ in range(n)]
        forward = smape(gold, pred)
        assert abs(forward - smape(pred, gold)) <= 1e-9
        assert 0.0 <= forward <= 2.0

    from dualplane.bench import BenchTask, score_suite
    tasks = [BenchTask(f"t{i:03d}", "classification", "p", "a") for i in range(54)]
    responses = {t.task_id: ("a" if i < 33 else "b") for i, t in enumerate(tasks)}
    rendered = score_suite(tasks, responses).to_json()["classification"]["rendered"]
    assert rendered == "33/54"


# ---------------------------------------------------------------------------
# 10. alternation guard truth table
# ---------------------------------------------------------------------------

@criterion("alternation guard: full truth table over episode-log prefixes of "
           "length <= 6 matches the documented rule")
def test_alternation_truth_table():
    def expected_allow(prefix, nxt, require_discovery):
        if nxt == "search":
            pending = False
            for event in prefix:
                if event == "search":
                    pending = True
                elif event == "execute":
                    pending = False
            return not pending
        if nxt == "execute":
            return ("search" in prefix) or not require_discovery
        return "execute" in prefix

    combos = 0
    for length in range(0, 7):
        for prefix in itertools.product(("search", "execute"), repeat=length):
            for nxt in ("search", "execute", "final"):
                for require_discovery in (True, False):
                    log = EpisodeLog(role=AgentRole.RESEARCH_WORKER,
                                     require_discovery=require_discovery)
                    for event in prefix:
                        log.record(event)
                    try:
                        alternation_guard(log, nxt)
                        allowed = True
                    except AlternationViolation:
                        allowed = False
                    assert allowed == expected_allow(prefix, nxt, require_discovery)
                    combos += 1
    assert combos == (2 ** 7 - 1) * 6
