"""The four discovery stages wired through the workflow plane.

Each stage loads its shipped graph, binds inputs from the session blackboard
and the active scenario, executes under the assigned worker role, then
distills metrics the run report exposes. Direct helpers (ti_pipeline etc.)
are the same machinery for single-stage use.
"""

from __future__ import annotations

from .engine import execute_graph
from .errors import (AdapterError, EmptyHitList, NoPocketFound, NoTargetsFound,
                     RunAborted)
from .graphspec import load_graph
from .reasoner import Mode
from .session import SessionStores
from .skills import EQUAL_WEIGHTS
from .supervisor import WorkerResult
from .types import AgentRole

STAGE_ROLES = {
    "ti": AgentRole.RESEARCH_WORKER,
    "hi": AgentRole.COMPUTATION_WORKER,
    "h2l": AgentRole.COMPUTATION_WORKER,
    "lo": AgentRole.COMPUTATION_WORKER,
}


def _stage_inputs(skill: str, stores: SessionStores) -> tuple[dict, dict]:
    bb = stores.blackboard
    refs = stores.blackboard_refs
    scenario = stores.scenario
    if skill == "ti":
        return {"disease": stores.query}, {"disease": stores.input_ref}
    if skill == "hi":
        strategy = bb.get("strategy") or (scenario.hit_strategy if scenario else "de_novo")
        return ({
            "structure": bb["structure"],
            "strategy": strategy,
            "top_fraction": (scenario.htvs.get("top_fraction", 0.05) if scenario else 0.05),
            "confirm_top_n": (scenario.hits_confirm if scenario else 5),
        }, {"structure": refs.get("structure", "")})
    if skill == "h2l":
        return ({
            "hits": bb["hits"],
            "target": bb.get("target_symbol", "unknown"),
            "leads_cap": (scenario.leads_cap if scenario else 5),
        }, {"hits": refs.get("hits", "")})
    if skill == "lo":
        lo = scenario.lo if scenario else {}
        return ({
            "leads": bb["leads"],
            "weights": dict(bb.get("weights") or EQUAL_WEIGHTS),
            "iterations": lo.get("iterations", 3),
            "validation_period": lo.get("validation_period", 2),
            "pool_size": lo.get("pool_size", 5),
            "final_top": lo.get("final_top", 10),
            "pocket": bb["pocket"],
            "structure": bb["structure"],
            "query": stores.query,
        }, {"leads": refs.get("leads", ""), "pocket": refs.get("pocket", ""),
            "structure": refs.get("structure", "")})
    raise ValueError(f"unknown skill {skill!r}")


def _collect(skill: str, stores: SessionStores, result) -> dict:
    """Fold stage outputs into the blackboard and derive report metrics."""
    bb = stores.blackboard
    refs = stores.blackboard_refs
    outs = result.node_outputs
    metrics: dict = {}
    if skill == "ti":
        retrieval = outs.get("retrieve", {}).get("retrieval", {})
        bb["structure"] = result.outputs["structure"]
        refs["structure"] = result.node_refs.get("prepare", "")
        bb["target_symbol"] = outs.get("target-gate", {}).get(
            "selected_target", {}).get("symbol", "")
        metrics = {
            "targets_retrieved": retrieval.get("count", 0),
            "top_targets": [t["symbol"] for t in outs.get("rank", {}).get("top_targets", [])],
            "selected_target": bb["target_symbol"],
            "structure": bb["structure"].get("pdb_id", ""),
            "repairs": len(result.outputs.get("repair_log", [])),
        }
    elif skill == "hi":
        bb["hits"] = result.outputs["hits"]
        refs["hits"] = result.node_refs.get("hit-take", "")
        bb["pocket"] = outs.get("pocket-gate", {}).get("pocket")
        refs["pocket"] = result.node_refs.get("pocket-gate", "")
        dock_failures = [f for f in result.failures if f.node_id == "dock"]
        report = outs.get("pocket-detect", {}).get("pocket_report", {})
        metrics = {
            "pockets": report.get("count", 0),
            "pocket_source": (bb["pocket"] or {}).get("source", ""),
            "generated": outs.get("gen-cluster", {}).get("generated_count", 0),
            "screened": outs.get("screen-cluster", {}).get("screened_count", 0),
            "representatives": outs.get("fuse", {}).get("representatives", 0),
            "dock_failures": len(dock_failures),
            "top_dock": outs.get("rank-hits", {}).get("top_dock"),
            "top_dti": outs.get("rank-hits", {}).get("top_dti"),
            "hits_confirmed": len(bb["hits"]),
        }
    elif skill == "h2l":
        bb["leads"] = result.outputs["leads"]
        refs["leads"] = result.node_refs.get("lead-gate", "")
        diag = result.outputs.get("h2l_diagnostics", {})
        leads = bb["leads"]
        metrics = {
            "expanded_unique": outs.get("merge", {}).get("expanded_unique", 0),
            "tier1_removed": outs.get("tier1", {}).get("tier1_removed", 0),
            "scored": diag.get("scored", 0),
            "zero_penalty": diag.get("zero_penalty", 0),
            "leads": len(leads),
            "lead_penalties": [lead["penalty"] for lead in leads],
            "lead_violations": sorted({v for lead in leads for v in lead["violations"]}),
        }
    elif skill == "lo":
        bb["winner"] = result.outputs.get("winner", {})
        bb["ranked_candidates"] = result.outputs.get("ranked_candidates", [])
        bb["report_text"] = result.outputs.get("report_text", "")
        refs["winner"] = result.node_refs.get("final-rank", "")
        dock_failures = [f for f in result.failures if f.node_id == "final-dock"]
        metrics = dict(result.outputs.get("lo_metrics", {}))
        metrics["dock_failures"] = len(dock_failures)
    return metrics


_STAGE_ERRORS = {
    "ti": NoTargetsFound,
    "hi": NoPocketFound,
}


def run_stage(skill: str, stores: SessionStores, role: AgentRole | None = None) -> WorkerResult:
    """Execute one skill graph as a worker episode."""
    role = role or STAGE_ROLES[skill]
    graph = load_graph(skill)
    inputs, input_refs = _stage_inputs(skill, stores)
    ctx = stores.run_ctx(role)
    try:
        result = execute_graph(graph, inputs, ctx, input_refs=input_refs, label=skill)
    except RunAborted as exc:
        cause = getattr(exc, "cause", None)
        if skill == "ti" and isinstance(cause, NoTargetsFound):
            raise cause
        if skill == "hi" and isinstance(cause, AdapterError) and "pocket" in cause.key:
            raise NoPocketFound(str(cause)) from exc
        raise
    if result.status == "suspended":
        return WorkerResult(summary=f"stage {skill} awaiting gate decision",
                            status="suspended", outputs={"metrics": {}})
    metrics = _collect(skill, stores, result)
    stores.report.setdefault("stage_digests", {})[skill] = dict(result.node_digests)
    stores.report.setdefault("failures", []).extend(
        dict(f.to_json(), stage=skill) for f in result.failures)
    summary = _stage_summary(skill, metrics)
    return WorkerResult(
        summary=summary,
        artifacts=tuple(result.node_refs.values()) if hasattr(result, "node_refs") else (),
        failures=[f.to_json() for f in result.failures],
        status="completed",
        outputs={"metrics": metrics, "graph": result},
    )


def _stage_summary(skill: str, metrics: dict) -> str:
    if skill == "ti":
        return (f"targets retrieved: {metrics['targets_retrieved']}; "
                f"selected {metrics['selected_target']} with structure "
                f"{metrics['structure']} (prepared)")
    if skill == "hi":
        return (f"pockets: {metrics['pockets']} ({metrics['pocket_source']}); "
                f"generated {metrics['generated']}, screened {metrics['screened']}, "
                f"representatives {metrics['representatives']}, "
                f"dock failures {metrics['dock_failures']}, "
                f"top dock {metrics['top_dock']} kcal/mol, "
                f"hits confirmed {metrics['hits_confirmed']}")
    if skill == "h2l":
        return (f"expanded {metrics['expanded_unique']} unique; "
                f"tier-1 removed {metrics['tier1_removed']}; "
                f"{metrics['leads']} leads "
                f"(zero-penalty: {metrics['zero_penalty']})")
    if skill == "lo":
        return (f"FINAL_CANDIDATES ranked; winner {metrics.get('winner_smiles')} "
                f"dock {metrics.get('winner_dock')} kcal/mol, "
                f"QED {metrics.get('winner_qed')}, SAS {metrics.get('winner_sas')}; "
                f"final-dock failures {metrics.get('dock_failures')}")
    return f"stage {skill} complete"


# -- single-stage entry points (same machinery, direct inputs) --------------

def ti_pipeline(disease: str, stores: SessionStores) -> WorkerResult:
    return run_stage("ti", stores)


def hi_pipeline(structure: dict, strategy: str, stores: SessionStores) -> WorkerResult:
    stores.blackboard["structure"] = structure
    stores.blackboard["strategy"] = strategy
    return run_stage("hi", stores)


def h2l_pipeline(hits: list, stores: SessionStores) -> WorkerResult:
    stores.blackboard["hits"] = hits
    return run_stage("h2l", stores)


def lo_pipeline(leads: list, weights: dict, iterations: int,
                validation_period: int, stores: SessionStores) -> WorkerResult:
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    stores.blackboard["leads"] = leads
    stores.blackboard["weights"] = weights
    if stores.scenario is not None:
        stores.scenario.raw.setdefault("lo", {})
        stores.scenario.raw["lo"]["iterations"] = iterations
        stores.scenario.raw["lo"]["validation_period"] = validation_period
    return run_stage("lo", stores)
