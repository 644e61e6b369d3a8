"""Control-plane behavior: intent routing, mode contracts, termination
bounds, replan capping, context isolation."""

import random

import pytest

from dualplane.errors import PlanInfeasible
from dualplane.reasoner import (Mode, Plan, PlanStep, ReflectDecision,
                                ScriptedReasoner)
from dualplane.session import SessionConfig, create_session
from dualplane.supervisor import classify_intent, run_supervisor
from dualplane.types import AgentRole, PermissionPolicy, ToolCategory


def cheap_step(tag="step"):
    # an episode whose script is empty ends immediately with no tool calls
    return PlanStep(description=f"{tag}", role=AgentRole.RESEARCH_WORKER,
                    required_categories=frozenset({ToolCategory.SEARCH}),
                    script=("[]",))


class AdversarialReasoner:
    """Always classifies complex, always replans, never sufficient."""

    def __init__(self, k, rng):
        self.k = k
        self.rng = rng

    def classify(self, query):
        return Mode.COMPLEX

    def plan(self, query, budget_k):
        n = self.rng.randint(1, 2 * self.k)   # may exceed K: must be clipped
        return Plan(steps=[cheap_step(f"p{i}") for i in range(max(1, min(n, budget_k)))],
                    budget_k=budget_k)

    def reflect(self, query, completed, remaining):
        n = self.rng.randint(1, 2 * self.k)
        return ReflectDecision.replan([cheap_step(f"r{i}") for i in range(n)])

    def synthesize(self, query, completed):
        return f"synthesized {len(completed)} steps"

    def worker_step(self, task, visible_tools, context):
        return None   # episodes end instantly


def make_stores(query, reasoner, k=4, r_max=3, mode="strict"):
    config = SessionConfig(seed=0, policy=PermissionPolicy.make(mode),
                           budget_k=k, replan_max=r_max)
    return create_session(query, config, reasoner=reasoner)


# ---------------------------------------------------------------------------
# intent routing
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("query,expected", [
    ("Design a drug for Crohn's disease", Mode.COMPLEX),
    ("Dock this ligand into PDB 3V4V", Mode.SIMPLE),
    ("What is the mechanism of vedolizumab?", Mode.DIRECT),
])
def test_intent_router_examples(reasoner, query, expected):
    assert classify_intent(query, reasoner) == expected


def test_unclassifiable_falls_back_to_simple(reasoner, make_session):
    stores = make_session("gibberish zxqv")
    assert classify_intent("gibberish zxqv", reasoner, stores) == Mode.SIMPLE
    assert any("fell back" in note for note in stores.recorder.trajectory.notes)


# ---------------------------------------------------------------------------
# mode contracts
# ---------------------------------------------------------------------------

def test_direct_mode_runs_zero_episodes(reasoner):
    stores = make_stores("What is the mechanism of vedolizumab?", reasoner)
    outcome = run_supervisor(stores.query, stores)
    assert outcome.mode == "direct"
    assert outcome.worker_episodes == 0
    assert "integrin" in outcome.synthesis
    assert outcome.status == "completed"


def test_simple_mode_runs_exactly_one_episode(reasoner):
    stores = make_stores("Dock this ligand into PDB 3V4V", reasoner)
    outcome = run_supervisor(stores.query, stores)
    assert outcome.mode == "simple"
    assert outcome.worker_episodes == 1
    assert outcome.status == "completed"
    # the episode performed a real governed tool call
    from dualplane.types import ActionKind
    tool_calls = [r for r in stores.recorder.trajectory.records
                  if r.action.kind is ActionKind.TOOL_CALL]
    assert len(tool_calls) == 1
    assert tool_calls[0].action.tool_ref == "docking/dock_molecule"


class SufficientAfterTwo:
    def classify(self, query):
        return Mode.COMPLEX

    def plan(self, query, budget_k):
        return Plan(steps=[cheap_step(f"s{i}") for i in range(4)], budget_k=budget_k)

    def reflect(self, query, completed, remaining):
        if len(completed) >= 2:
            return ReflectDecision.sufficient()
        return ReflectDecision.cont()

    def synthesize(self, query, completed):
        return "done"

    def worker_step(self, task, visible_tools, context):
        return None


def test_sufficient_info_stops_after_two_of_four():
    stores = make_stores("complex run", SufficientAfterTwo(), k=8)
    outcome = run_supervisor(stores.query, stores)
    assert outcome.worker_episodes == 2


# ---------------------------------------------------------------------------
# termination bounds (the acceptance suite runs 200 randomized instances)
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("seed", range(12))
def test_adversarial_replan_is_bounded(seed):
    rng = random.Random(seed)
    k = rng.randint(1, 5)
    r_max = rng.randint(0, 3)
    stores = make_stores("adversarial", AdversarialReasoner(k, rng), k=k, r_max=r_max)
    outcome = run_supervisor(stores.query, stores)
    assert outcome.worker_episodes <= k * (1 + r_max)
    assert outcome.status == "completed"


def test_replan_capped_and_downgraded():
    stores = make_stores("adversarial", AdversarialReasoner(2, random.Random(1)),
                         k=2, r_max=1)
    run_supervisor(stores.query, stores)
    notes = stores.recorder.trajectory.notes
    assert any("downgraded to CONTINUE" in n for n in notes)


# ---------------------------------------------------------------------------
# plan feasibility and context isolation
# ---------------------------------------------------------------------------

class InfeasiblePlanner(SufficientAfterTwo):
    def plan(self, query, budget_k):
        step = PlanStep(description="research worker wants the docking cluster",
                        role=AgentRole.RESEARCH_WORKER,
                        required_categories=frozenset({ToolCategory.COMPUTATION}))
        return Plan(steps=[step], budget_k=budget_k)


def test_infeasible_plan_rejected_in_strict_mode():
    stores = make_stores("complex run", InfeasiblePlanner())
    with pytest.raises(PlanInfeasible):
        run_supervisor(stores.query, stores)


def test_infeasible_plan_allowed_in_permissive_mode():
    stores = make_stores("complex run", InfeasiblePlanner(), mode="permissive")
    outcome = run_supervisor(stores.query, stores)
    assert outcome.status == "completed"


def test_supervisor_context_holds_only_bounded_summaries(make_session, queries):
    stores = make_session(queries["crohns"], seed=3)
    run_supervisor(stores.query, stores)
    limit = stores.config.budget.max_output_chars
    assert stores.recorder.state.context, "stage summaries expected"
    for entry in stores.recorder.state.context:
        assert entry.chars <= limit
    assert stores.recorder.state.context_chars <= stores.config.context_cap


def test_governance_violation_recorded_and_episode_continues(reasoner):
    stores = make_stores("run the restricted probe please", reasoner)
    outcome = run_supervisor(stores.query, stores)
    assert outcome.status == "completed"
    kinds = {v["kind"] for v in stores.recorder.trajectory.compliance_violations}
    assert "permission" in kinds


def test_research_episode_retrieves_25_candidates(make_session, queries):
    """A scripted research episode hits the knowledge server and carries the
    full candidate list back as an artifact."""
    from dualplane.reasoner import PlanStep
    from dualplane.supervisor import spawn_worker

    stores = make_session(queries["crohns"])
    script = (
        '{"kind": "search", "query": "search targets disease associations"}',
        '{"kind": "execute", "from_search": 0, "params": {"disease_id": "DIS:CROHN"}}',
        '{"kind": "final", "answer": "retrieved disease target candidates"}',
    )
    step = PlanStep(description="retrieve disease targets",
                    role=AgentRole.RESEARCH_WORKER,
                    required_categories=frozenset({ToolCategory.SEARCH}),
                    script=script)
    result = spawn_worker(step, stores, [])
    assert result.status == "completed"
    assert result.artifacts
    payload = stores.ledger.get_json(result.artifacts[0])
    assert payload["count"] == 25
    assert len(payload["candidates"]) == 25


def test_alternation_violation_recovered_in_episode(make_session, queries):
    """Consecutive searches: the violation is recorded and the episode still
    reaches its execute and final answer."""
    from dualplane.reasoner import PlanStep
    from dualplane.supervisor import spawn_worker

    stores = make_session(queries["crohns"])
    script = (
        '{"kind": "search", "query": "target associations evidence scores"}',
        '{"kind": "search", "query": "target associations evidence scores again"}',
        '{"kind": "execute", "from_search": 0, "params": {"disease_id": "DIS:CROHN"}}',
        '{"kind": "final", "answer": "done"}',
    )
    step = PlanStep(description="greedy searcher",
                    role=AgentRole.RESEARCH_WORKER,
                    required_categories=frozenset({ToolCategory.SEARCH}),
                    script=script)
    result = spawn_worker(step, stores, [])
    assert result.status == "completed"
    assert result.summary == "done"
    violations = stores.recorder.trajectory.compliance_violations
    assert [v["kind"] for v in violations] == ["alternation"]
    assert result.artifacts, "the forced execute still ran"


def test_budget_exhaustion_flags_partial_episode(make_session, queries):
    from dualplane.fabric import InvocationBudget
    from dualplane.reasoner import PlanStep
    from dualplane.session import SessionConfig, create_session
    from dualplane.supervisor import spawn_worker

    stores = make_session(queries["crohns"],
                          budget=InvocationBudget(max_calls_per_episode=1))
    script = (
        '{"kind": "search", "query": "target associations evidence scores"}',
        '{"kind": "execute", "from_search": 0, "params": {"disease_id": "DIS:CROHN"}}',
        '{"kind": "execute", "from_search": 0, "params": {"disease_id": "DIS:CROHN"}}',
        '{"kind": "final", "answer": "never reached"}',
    )
    step = PlanStep(description="over budget",
                    role=AgentRole.RESEARCH_WORKER,
                    required_categories=frozenset({ToolCategory.SEARCH}),
                    script=script)
    result = spawn_worker(step, stores, [])
    assert result.partial is True
    assert result.status == "partial"
