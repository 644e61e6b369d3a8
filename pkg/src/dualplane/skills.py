"""Discovery-stage algorithms and the transform registry the graphs call.

The real algorithmic content lives here: target ranking, dual-stream fusion
and clustering, two-tier filtration with penalty scoring, and the composite
reward driving the optimization loop. Everything is a pure function of its
inputs (plus the run seed), so graph runs replay exactly.
"""

from __future__ import annotations

from importlib import resources
from typing import Any

from .errors import EmptyHitList, MissingScore, NoPocketFound, NoTargetsFound
from .molecules import (ScoredMolecule, canonical_smiles, cluster_representatives,
                        fuse_and_rerank)

#: endpoint -> (direction, threshold); "max" endpoints violate above the
#: threshold (risk probabilities), "min" endpoints violate below it.
ENDPOINT_THRESHOLDS: dict[str, tuple[str, float]] = {
    "herg": ("max", 0.5),
    "ames": ("max", 0.5),
    "dili": ("max", 0.5),
    "cyp": ("max", 0.5),
    "ppb": ("max", 0.95),
    "caco2": ("min", 0.3),
}

AFFINITY_NORMALIZATION_KCAL = 12.0   # strong-binder magnitude used to map dock scores into [0,1]


def endpoint_violations(endpoints: dict[str, float]) -> list[str]:
    violated = []
    for name, (direction, threshold) in ENDPOINT_THRESHOLDS.items():
        value = endpoints.get(name)
        if value is None:
            continue
        if direction == "max" and value > threshold:
            violated.append(name)
        elif direction == "min" and value < threshold:
            violated.append(name)
    return violated


def load_alert_patterns() -> list[tuple[str, str]]:
    """Structural-alert stand-ins: (name, literal substring) pairs."""
    text = resources.files("dualplane").joinpath("data/alerts.txt").read_text("utf-8")
    patterns = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        name, _, pattern = line.partition(" ")
        patterns.append((name, pattern.strip()))
    return patterns


def match_alert(smiles: str, patterns: list[tuple[str, str]]) -> str | None:
    for name, pattern in patterns:
        if pattern and pattern in smiles:
            return name
    return None


def composite_reward(scores: dict[str, float], weights: dict[str, float]) -> float:
    """Balance affinity, drug-likeness and synthesizability into [0, 1].

    reward = w_aff * clamp(-dock/12, 0, 1) + w_qed * qed + w_sas * (1 - (sas-1)/9)
    """
    total = weights.get("w_aff", 0) + weights.get("w_qed", 0) + weights.get("w_sas", 0)
    if any(weights.get(w, 0) < 0 for w in ("w_aff", "w_qed", "w_sas")):
        raise ValueError("weights must be non-negative")
    if abs(total - 1.0) > 1e-9:
        raise ValueError("weights must sum to 1")
    for name in ("dock_kcal_mol", "qed", "sas"):
        if name not in scores or scores[name] is None:
            raise MissingScore(name)
    aff_norm = min(max(-scores["dock_kcal_mol"] / AFFINITY_NORMALIZATION_KCAL, 0.0), 1.0)
    qed = min(max(float(scores["qed"]), 0.0), 1.0)
    sas_term = 1.0 - (min(max(float(scores["sas"]), 1.0), 10.0) - 1.0) / 9.0
    return (weights["w_aff"] * aff_norm
            + weights["w_qed"] * qed
            + weights["w_sas"] * sas_term)


EQUAL_WEIGHTS = {"w_aff": 1 / 3, "w_qed": 1 / 3, "w_sas": 1 / 3}


# ---------------------------------------------------------------------------
# transform registry (graph nodes reference these by name)
# ---------------------------------------------------------------------------

TRANSFORMS: dict[str, Any] = {}


def transform(name: str):
    def wrap(fn):
        TRANSFORMS[name] = fn
        return fn
    return wrap


@transform("rank_targets")
def rank_targets(inputs: dict, ctx) -> dict:
    retrieval = inputs["retrieval"]
    candidates = list(retrieval.get("candidates", []))
    if not candidates:
        raise NoTargetsFound(retrieval.get("disease_id", "unknown disease"))
    ranked = sorted(candidates, key=lambda c: (-c["score"], c["symbol"]))
    recommended = retrieval.get("recommended")
    selected = next((c for c in ranked if c["symbol"] == recommended), ranked[0])
    return {"ranked_targets": ranked, "top_targets": ranked[:5],
            "selected_target": selected}


@transform("prepare_structure")
def prepare_structure(inputs: dict, ctx) -> dict:
    raw = dict(inputs["raw_structure"])
    repair_log = [
        f"completed missing side chains on {raw['pdb_id']}",
        "added hydrogens and assigned protonation states",
        "stripped waters and alternate conformers",
    ]
    raw["prepared"] = True
    raw["repairs"] = len(repair_log)
    return {"structure": raw, "repair_log": repair_log}


def _molecules_from(entries: list[dict], score_key: str, provenance: str) -> list[ScoredMolecule]:
    out = []
    for e in entries:
        out.append(ScoredMolecule(smiles=e["smiles"],
                                  scores={score_key: e[score_key]},
                                  provenance=[provenance]))
    return out


@transform("cluster_generated")
def cluster_generated(inputs: dict, ctx) -> dict:
    payload = inputs["gen_payload"]
    mols = _molecules_from(payload.get("molecules", []), "gen_score", "generative")
    reps = cluster_representatives(mols, inputs.get("threshold", 0.6), inputs.get("k", 20))
    return {"gen_reps": [m.to_json() for m in reps],
            "generated_count": payload.get("count", len(mols))}


@transform("cluster_screened")
def cluster_screened(inputs: dict, ctx) -> dict:
    payload = inputs["screen_payload"]
    mols = _molecules_from(payload.get("top", []), "dti", "screening")
    reps = cluster_representatives(mols, inputs.get("threshold", 0.6), inputs.get("k", 10))
    return {"screen_reps": [m.to_json() for m in reps],
            "screened_count": payload.get("screened", 0)}


@transform("fuse_streams")
def fuse_streams(inputs: dict, ctx) -> dict:
    list_a = [ScoredMolecule.from_json(m) for m in inputs.get("gen_reps", [])]
    list_b = [ScoredMolecule.from_json(m) for m in inputs.get("screen_reps", [])]
    fused = fuse_and_rerank(list_a, list_b)
    return {"fused": [m.to_json() for m in fused],
            "pocket": inputs["pocket"],
            "representatives": len(fused)}


@transform("rank_hits")
def rank_hits(inputs: dict, ctx) -> dict:
    fused = [ScoredMolecule.from_json(m) for m in inputs["fused"]]
    dock_map: dict[str, float] = {}
    for payload in inputs.get("dock_results", []):
        dock_map[canonical_smiles(payload["smiles"])] = payload["dock_kcal_mol"]
    hits = []
    for mol in fused:
        dock = dock_map.get(mol.key)
        if dock is None:
            continue   # contained failure: excluded from ranking
        mol.scores["dock_kcal_mol"] = dock
        hits.append(mol)
    if not hits:
        raise EmptyHitList("every docking item failed")
    hits.sort(key=lambda m: (m.scores["dock_kcal_mol"], m.key))
    dtis = [m.scores["dti"] for m in hits if "dti" in m.scores]
    return {"hits_ranked": [m.to_json() for m in hits],
            "top_dock": hits[0].scores["dock_kcal_mol"],
            "top_dti": max(dtis) if dtis else None}


@transform("take_top_hits")
def take_top_hits(inputs: dict, ctx) -> dict:
    n = inputs["confirm_top_n"]
    return {"hits": list(inputs["hits_ranked"])[:n]}


@transform("merge_expansion")
def merge_expansion(inputs: dict, ctx) -> dict:
    merged: dict[str, dict] = {}
    for payload_key in ("expanded_r", "expanded_s"):
        for entry in inputs[payload_key].get("molecules", []):
            key = canonical_smiles(entry["smiles"])
            if key not in merged:
                merged[key] = {"smiles": entry["smiles"]}
    out = list(merged.values())
    return {"merged": out, "expanded_unique": len(out)}


@transform("tier1_filter")
def tier1_filter(inputs: dict, ctx) -> dict:
    patterns = getattr(ctx, "alerts", None) or load_alert_patterns()
    survivors, removed = [], []
    for entry in inputs["merged"]:
        alert = match_alert(entry["smiles"], patterns)
        if alert is None:
            survivors.append(entry)
        else:
            removed.append({"smiles": entry["smiles"], "alert": alert})
    return {"tier1_survivors": survivors,
            "tier1_smiles": [e["smiles"] for e in survivors],
            "tier1_removed": len(removed)}


@transform("select_leads")
def select_leads(inputs: dict, ctx) -> dict:
    profile_map = {canonical_smiles(p["smiles"]): p["endpoints"]
                   for p in inputs["profiles"].get("profiles", [])}
    dti_map = {canonical_smiles(s["smiles"]): s["dti"]
               for s in inputs["dti_payload"].get("scores", [])}
    scored = []
    for entry in inputs["tier1_survivors"]:
        key = canonical_smiles(entry["smiles"])
        endpoints = profile_map.get(key, {})
        violations = endpoint_violations(endpoints)
        scored.append({
            "smiles": entry["smiles"],
            "dti": dti_map.get(key, 0.0),
            "endpoints": endpoints,
            "violations": violations,
            "penalty": len(violations),
        })
    scored.sort(key=lambda e: (e["penalty"], -e["dti"], canonical_smiles(e["smiles"])))
    cap = inputs["leads_cap"]
    leads = scored[:cap]
    diagnostics = {
        "scored": len(scored),
        "zero_penalty": sum(1 for e in scored if e["penalty"] == 0),
        "lead_count": len(leads),
        "all_filtered": len(scored) == 0,
    }
    return {"leads": leads, "h2l_diagnostics": diagnostics}


@transform("lo_config")
def lo_config(inputs: dict, ctx) -> dict:
    leads = inputs["leads"]
    weights = inputs["weights"]
    pool_size = inputs["pool_size"]
    members = [{"smiles": lead["smiles"], "dti": lead.get("dti")}
               for lead in leads[:pool_size]]
    pool = {
        "iteration": 0,
        "requested": inputs["iterations"],
        "pool_size": pool_size,
        "final_top": inputs["final_top"],
        "validation_period": inputs["validation_period"],
        "members": members,
        "archive": {},
    }
    return {"pool": pool, "weights": weights}


def _with_composite(candidate: dict, weights: dict) -> dict:
    out = dict(candidate)
    out["composite"] = round(composite_reward(
        {"dock_kcal_mol": candidate["est_dock"], "qed": candidate["qed"],
         "sas": candidate["sas"]}, weights), 6)
    return out


@transform("lo_score")
def lo_score(inputs: dict, ctx) -> dict:
    pool = inputs["pool"]
    payload = inputs["proposal_payload"]
    weights = inputs["weights"]
    scored = [_with_composite(c, weights)
              for c in list(payload.get("pool_scores", [])) + list(payload.get("proposals", []))]
    scored.sort(key=lambda c: (-c["composite"], canonical_smiles(c["smiles"])))
    iteration_next = pool["iteration"] + 1
    validate_items: list[dict] = []
    if iteration_next % pool["validation_period"] == 0:
        validate_items = [{"smiles": c["smiles"]} for c in scored[:3]]
    return {"scored": scored, "validate_items": validate_items}


@transform("lo_select")
def lo_select(inputs: dict, ctx) -> dict:
    pool = inputs["pool"]
    scored = inputs["scored"]
    archive = {k: dict(v) for k, v in pool.get("archive", {}).items()}
    for cand in scored:
        key = canonical_smiles(cand["smiles"])
        if key not in archive or cand["composite"] > archive[key]["composite"]:
            archive[key] = dict(cand)
    iteration = pool["iteration"] + 1
    validated_total = pool.get("validated_total", 0) + len(inputs.get("validations", []))
    members = [{k: v for k, v in c.items()}
               for c in scored[:pool["pool_size"]]]
    if iteration >= pool["requested"]:
        final = sorted(archive.values(),
                       key=lambda c: (-c["composite"], canonical_smiles(c["smiles"])))
        final_candidates = final[:pool["final_top"]]
        return {"pool": None,
                "final_candidates": final_candidates,
                "lo_trace": {"iterations_run": iteration,
                             "archive_size": len(archive),
                             "validated": validated_total}}
    next_pool = dict(pool)
    next_pool["iteration"] = iteration
    next_pool["members"] = members
    next_pool["archive"] = archive
    next_pool["validated_total"] = validated_total
    return {"pool": next_pool, "final_candidates": None, "lo_trace": None}


@transform("final_rank")
def final_rank(inputs: dict, ctx) -> dict:
    weights = inputs["weights"]
    dock_map: dict[str, float] = {}
    for payload in inputs.get("final_docked", []):
        dock_map[canonical_smiles(payload["smiles"])] = payload["dock_kcal_mol"]
    ranked = []
    anomalies = 0
    for cand in inputs["final_candidates"]:
        key = canonical_smiles(cand["smiles"])
        entry = dict(cand)
        if key not in dock_map:
            entry.update({"final_dock": None, "dock_success": False,
                          "composite": None, "status": "dock_failed"})
        else:
            dock = dock_map[key]
            success = dock < 0
            if not success:
                anomalies += 1
            entry.update({
                "final_dock": dock,
                "dock_success": success,
                "composite": round(composite_reward(
                    {"dock_kcal_mol": dock, "qed": cand["qed"], "sas": cand["sas"]},
                    weights), 6),
                "status": "ok" if success else "anomalous_zero_score",
            })
        ranked.append(entry)
    ranked.sort(key=lambda e: (
        not e["dock_success"],
        e["composite"] is None,
        -(e["composite"] or 0.0),
        canonical_smiles(e["smiles"]),
    ))
    winner = ranked[0]
    metrics = {
        "final_candidates": len(ranked),
        "final_docked": len(dock_map),
        "final_dock_failures": len(ranked) - len(dock_map),
        "zero_score_anomalies": anomalies,
        "winner_smiles": winner["smiles"],
        "winner_dock": winner.get("final_dock"),
        "winner_qed": winner.get("qed"),
        "winner_sas": winner.get("sas"),
        "winner_composite": winner.get("composite"),
        "trace": inputs.get("lo_trace", {}),
    }
    return {"ranked_candidates": ranked, "winner": winner, "lo_metrics": metrics}


@transform("candidate_report")
def candidate_report(inputs: dict, ctx) -> dict:
    winner = inputs["winner"]
    lines = [
        f"Candidate report for: {inputs.get('query', '')}",
        f"Top candidate: {winner['smiles']}",
        f"  binding score: {winner.get('final_dock')} kcal/mol",
        f"  drug-likeness (QED): {winner.get('qed')}",
        f"  synthetic accessibility (SAS): {winner.get('sas')}",
        f"  composite reward: {winner.get('composite')}",
    ]
    for extra_key in ("herg_safety", "bbb_permeability"):
        if extra_key in winner:
            lines.append(f"  {extra_key}: {winner[extra_key]}")
    lines.append("  interface-confidence (ipTM): externally supplied, not computed here")
    runners = [c["smiles"] for c in inputs["ranked_candidates"][1:4]]
    if runners:
        lines.append("Runners-up: " + ", ".join(runners))
    return {"report_text": "\n".join(lines)}
