"""Control plane: intent routing and the bounded plan-execute-reflect loop.

The supervisor classifies a query, runs zero (direct), one (simple) or up to
K*(1+R_max) (complex) worker episodes, reflecting after each step and
splicing replanned steps at most R_max times. Workers run in isolated
contexts; only their summaries flow back up, so the supervisor context stays
small regardless of tool output volume.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

from .errors import (AlternationViolation, BudgetExhausted, DualPlaneError,
                     ParamValidationError, PermissionDenied, PlanInfeasible,
                     RunAborted, ToolError)
from .fabric import EpisodeLog, alternation_guard, result_from_error
from .params import validate_params
from .reasoner import Mode, Plan, PlanStep, Reasoner, ReflectDecision
from .registry import tool_search
from .session import SessionStores
from .types import Action, AgentRole, ContextEntry, PolicyMode, digest_json

logger = logging.getLogger(__name__)

WORKER_STEP_CAP = 48   # hard stop for scripted episodes, independent of budget


@dataclass
class WorkerResult:
    summary: str
    artifacts: tuple = ()
    partial: bool = False
    failures: list = field(default_factory=list)
    status: str = "completed"
    outputs: dict = field(default_factory=dict)


@dataclass
class RunOutcome:
    synthesis: str
    trajectory: object
    status: str
    mode: str
    worker_episodes: int
    report: dict


def classify_intent(query: str, reasoner: Reasoner, stores: SessionStores | None = None) -> Mode:
    """Route a query to direct / simple / complex; unclassifiable queries
    fall back to simple and the fallback is recorded."""
    if not query.strip():
        raise ValueError("query must be non-empty")
    mode = reasoner.classify(query)
    if mode is None:
        mode = Mode.SIMPLE
        if stores is not None:
            stores.recorder.note("intent classification fell back to simple")
    return mode


def _validate_plan(plan: Plan, stores: SessionStores) -> None:
    policy = stores.config.policy
    if policy.mode is not PolicyMode.STRICT:
        return
    for step in plan.steps:
        grants = policy.effective_grants(step.role)
        if not step.required_categories <= grants:
            missing = {c.value for c in step.required_categories - grants}
            raise PlanInfeasible(
                f"step {step.description!r} requires categories {sorted(missing)} "
                f"not granted to {step.role.value}")


def reflect(query: str, completed: list[str], remaining: list[PlanStep],
            reasoner: Reasoner, replans_used: int, replan_max: int,
            stores: SessionStores | None = None) -> ReflectDecision:
    """Pass-through to the reasoner with the run-level replan cap applied."""
    decision = reasoner.reflect(query, completed, remaining)
    if decision.value == "REPLAN" and replans_used >= replan_max:
        if stores is not None:
            stores.recorder.note(
                f"replan downgraded to CONTINUE: replan cap {replan_max} reached")
        return ReflectDecision.cont()
    return decision


def spawn_worker(step: PlanStep, stores: SessionStores, context_slice: list[str]) -> WorkerResult:
    """Run one worker episode for a plan step.

    Skill-bound steps execute their graph in the workflow plane under the
    worker's role; scripted steps loop the reasoner's worker policy over the
    governance-filtered tool list with alternation enforced. Either way the
    worker's private context is discarded; only the summary returns.
    """
    stores.events.emit("episode_started", {"step": step.description,
                                           "role": step.role.value,
                                           "skill": step.skill})
    if step.skill:
        from .pipelines import run_stage
        result = run_stage(step.skill, stores, step.role)
    else:
        result = _run_scripted_episode(step, stores, context_slice)
    stores.events.emit("episode_finished", {"step": step.description,
                                            "status": result.status})
    return result


def _run_scripted_episode(step: PlanStep, stores: SessionStores,
                          context_slice: list[str]) -> WorkerResult:
    role = step.role
    policy = stores.config.policy
    budget = stores.config.budget
    reasoner = stores.reasoner
    episode = EpisodeLog(role=role, require_discovery=True)
    context: list[ContextEntry] = [ContextEntry("task", s) for s in context_slice]
    recorder = stores.recorder
    artifacts: list[str] = []
    failures: list[dict] = []
    last_search: list = []
    final_answer = ""
    partial = False
    task = step.description
    if step.script:
        task = "script:[" + ",".join(step.script) + "]"

    for _ in range(WORKER_STEP_CAP):
        visible = stores.registry.visible_tools(role, policy)
        action_spec = reasoner.worker_step(task, visible, context)
        if action_spec is None:
            break
        kind = action_spec.get("kind")

        if kind == "thought":
            recorder.record(Action.thought(role, action_spec.get("text", "")),
                            digest_json(action_spec))
            context.append(ContextEntry("action", "thought"))
            continue

        if kind == "search":
            query = action_spec.get("query", "")
            try:
                alternation_guard(episode, "search")
            except AlternationViolation as exc:
                recorder.add_violation("alternation", str(exc))
                recorder.note(f"alternation violation contained in episode: {exc}")
                context.append(ContextEntry("action", "search-denied"))
                continue
            episode.record("search", query)
            last_search = tool_search(query, role, policy, stores.registry)
            refs = [t.ref for t in last_search]
            recorder.record(Action.thought(role, f"tool_search:{query}"),
                            digest_json(refs))
            context.append(ContextEntry("action", "search:" + ",".join(refs[:4])))
            continue

        if kind == "execute":
            if "tool" in action_spec:
                tool = stores.registry.get_tool(action_spec["tool"])
            else:
                idx = action_spec.get("from_search", 0)
                tool = last_search[idx] if idx < len(last_search) else None
            if tool is None:
                recorder.note(f"episode requested an unknown tool: {action_spec}")
                context.append(ContextEntry("action", "execute-missing-tool"))
                continue
            try:
                alternation_guard(episode, "execute")
            except AlternationViolation as exc:
                recorder.add_violation("alternation", str(exc))
                context.append(ContextEntry("action", "execute-denied"))
                continue
            try:
                call = validate_params(action_spec.get("params", {}), tool)
            except ParamValidationError as exc:
                recorder.note(f"parameter validation rejected {tool.ref}: {exc}")
                context.append(ContextEntry("action", f"invalid-params:{exc.kind}"))
                continue
            action = Action.tool_call(role, tool.ref, call.params_dict)
            started = time.perf_counter()
            try:
                result = stores.fabric.execute_tool(call, role, policy, budget, episode)
            except PermissionDenied as exc:
                recorder.add_violation("permission", str(exc))
                context.append(ContextEntry("action", "permission-denied"))
                continue
            except BudgetExhausted as exc:
                recorder.note(f"episode ended early: {exc}")
                partial = True
                break
            except ToolError as exc:
                err = result_from_error(exc)
                recorder.record(action, err.digest(),
                                wall_ms=(time.perf_counter() - started) * 1e3)
                failures.append({"tool": tool.ref, "kind": exc.kind})
                context.append(ContextEntry("action", f"tool-error:{exc.kind}"))
                continue
            recorder.record(action, result.digest(), artifacts=result.produced_artifacts,
                            wall_ms=(time.perf_counter() - started) * 1e3)
            artifacts.extend(result.produced_artifacts)
            context.append(ContextEntry("action", "execute:" + tool.ref))
            context.append(ContextEntry("tool", result.summary))
            continue

        if kind == "final":
            try:
                alternation_guard(episode, "final")
            except AlternationViolation as exc:
                recorder.add_violation("alternation", str(exc))
                context.append(ContextEntry("action", "final-denied"))
                continue
            episode.record("final", "")
            final_answer = action_spec.get("answer", "")
            break

        recorder.note(f"unknown scripted action kind {kind!r}; episode continues")
        context.append(ContextEntry("action", f"unknown:{kind}"))

    tool_entries = [e.text for e in context if e.role == "tool"]
    summary = final_answer or (tool_entries[-1] if tool_entries else "episode produced no output")
    return WorkerResult(summary=summary, artifacts=tuple(artifacts),
                        partial=partial, failures=failures,
                        status="partial" if partial else "completed")


def run_supervisor(query: str, stores: SessionStores) -> RunOutcome:
    """Execute the bounded supervisor loop for one session.

    direct: immediate synthesis, zero worker episodes. simple: exactly one
    episode. complex: plan up to K steps, reflect after each, splice replans
    (capped at R_max) and stop early on SUFFICIENT_INFO. Worker errors become
    contained failures, never aborts of the loop itself.
    """
    reasoner = stores.reasoner
    recorder = stores.recorder
    k = stores.config.budget_k
    replan_max = stores.config.replan_max
    episode_cap = k * (1 + replan_max)

    mode = classify_intent(query, reasoner, stores)
    stores.mode = mode.value
    recorder.record(Action.thought(AgentRole.SUPERVISOR, f"classify:{mode.value}"),
                    digest_json(mode.value))
    stores.events.emit("session_status", {"mode": mode.value, "status": "running"})

    episodes = 0
    completed_summaries: list[str] = []
    stage_metrics: dict = {}

    if mode is Mode.DIRECT:
        synthesis = reasoner.synthesize(query, [])
        recorder.trajectory.final_synthesis = synthesis
        recorder.record(Action.terminate(AgentRole.REPORTER, "direct completion"),
                        digest_json(synthesis))
        stores.status = "completed"
        return _finish(stores, synthesis, mode, episodes, stage_metrics)

    plan = reasoner.plan(query, k if mode is Mode.COMPLEX else 1)
    if mode is Mode.SIMPLE:
        plan = Plan(steps=plan.steps[:1], budget_k=1)
    if len(plan.steps) > k:
        recorder.note(f"plan clipped from {len(plan.steps)} to budget K={k}")
        plan = Plan(steps=plan.steps[:k], budget_k=k)
    _validate_plan(plan, stores)
    recorder.record(Action.thought(AgentRole.SUPERVISOR,
                                   f"plan:{len(plan.steps)} steps"),
                    digest_json([s.to_json() for s in plan.steps]))

    steps = list(plan.steps)
    replans = 0
    i = 0
    suspended = False
    while i < len(steps):
        if episodes >= episode_cap:
            recorder.note(f"episode cap reached: K*(1+R_max) = {episode_cap}")
            break
        step = steps[i]
        try:
            result = spawn_worker(step, stores, completed_summaries)
        except RunAborted as exc:
            cause = getattr(exc, "cause", None)
            recorder.note(f"stage {step.description!r} aborted: {exc}")
            episodes += 1
            if stores.status == "rejected" or "rejected" in str(exc):
                stores.status = "rejected"
                synthesis = f"run rejected at gate during: {step.description}"
                recorder.trajectory.final_synthesis = synthesis
                return _finish(stores, synthesis, mode, episodes, stage_metrics)
            stores.status = "failed"
            stores.report["error"] = {
                "class": getattr(cause, "code", "run_aborted"),
                "detail": str(exc),
            }
            synthesis = f"run failed during: {step.description}"
            recorder.trajectory.final_synthesis = synthesis
            return _finish(stores, synthesis, mode, episodes, stage_metrics)
        episodes += 1
        if result.status == "suspended":
            suspended = True
            recorder.note(f"session suspended awaiting gate during: {step.description}")
            break
        completed_summaries.append(result.summary)
        recorder.add_context("worker", result.summary)
        if result.outputs.get("metrics"):
            stage_metrics[step.skill or f"step{i + 1}"] = result.outputs["metrics"]

        if mode is Mode.SIMPLE:
            break
        decision = reflect(query, completed_summaries, steps[i + 1:],
                           reasoner, replans, replan_max, stores)
        recorder.record(Action.thought(AgentRole.SUPERVISOR,
                                       f"reflect:{decision.value}"),
                        digest_json(decision.value))
        if decision.value == "SUFFICIENT_INFO":
            break
        if decision.value == "REPLAN":
            replans += 1
            new_steps = list(decision.new_steps)[:k]
            steps = steps[:i + 1] + new_steps
            recorder.note(f"replan {replans}/{replan_max}: "
                          f"{len(new_steps)} new steps spliced at {i + 1}")
            try:
                _validate_plan(Plan(steps=new_steps, budget_k=k), stores)
            except PlanInfeasible as exc:
                recorder.note(f"replanned steps infeasible, keeping remainder: {exc}")
                steps = steps[:i + 1]
        i += 1

    if suspended:
        stores.status = "suspended_awaiting_gate"
        synthesis = ""
    else:
        synthesis = reasoner.synthesize(query, completed_summaries)
        recorder.trajectory.final_synthesis = synthesis
        recorder.record(Action.terminate(AgentRole.REPORTER, "synthesis complete"),
                        digest_json(synthesis))
        stores.status = "completed"
    return _finish(stores, synthesis, mode, episodes, stage_metrics)


def _finish(stores: SessionStores, synthesis: str, mode: Mode,
            episodes: int, stage_metrics: dict) -> RunOutcome:
    report = stores.report
    report.update({
        "session_id": stores.session_id,
        "query": stores.query,
        "mode": mode.value,
        "status": stores.status,
        "seed": stores.config.seed,
        "scenario": stores.scenario.scenario_id if stores.scenario else None,
        "worker_episodes": episodes,
        "metrics": stage_metrics,
        "compliance_violations": list(stores.recorder.trajectory.compliance_violations),
        "synthesis": synthesis,
        # session-independent fingerprint of the whole run: result digests in order
        "trajectory_digest": digest_json(
            [r.result_digest for r in stores.recorder.trajectory.records]),
    })
    if "winner" in stores.blackboard:
        report["winner"] = stores.blackboard["winner"]
    if "report_text" in stores.blackboard:
        report["report_text"] = stores.blackboard["report_text"]
    if stores.scenario and stores.scenario.raw.get("report", {}).get("benchmark"):
        report["benchmark"] = {
            "compound": stores.scenario.raw["report"]["benchmark"],
            "iptm_external": None,   # supplied by an external structure pipeline
        }
    stores.events.emit("session_status", {"status": stores.status})
    return RunOutcome(
        synthesis=synthesis,
        trajectory=stores.recorder.trajectory,
        status=stores.status,
        mode=mode.value,
        worker_episodes=episodes,
        report=report,
    )
