"""Deterministic simulated tool servers behind the fabric.

Ten servers mirror the federation categories (search / computation /
filesystem): target knowledge, literature, structures, pocket finder,
de-novo generator, HTVS scorer, property predictor, docking engine,
optimizer and a workspace filesystem. Every payload is a pure function of
(params, scenario fixture, seed, call ordinal) so runs replay byte-identical.
No scientific claims live here: scores are fixture values.
"""

from __future__ import annotations

import random
from typing import Any

from .errors import ToolError
from .molecules import canonical_smiles, synth_smiles
from .scenarios import Scenario, hash_in_range
from .types import canonical_json, digest

_MUTATION_SUFFIXES = ["C", "N", "O", "CC", "CO", "CN", "CCO", "F", "CCN", "OC"]


def _scenario(ctx: dict) -> Scenario | None:
    return ctx.get("scenario")


# ---------------------------------------------------------------------------
# search-category servers
# ---------------------------------------------------------------------------

def _knowledge(tool: str, params: dict, ctx: dict) -> Any:
    scenario = _scenario(ctx)
    if tool == "normalize_disease":
        query = params["query"]
        if scenario is None or not scenario.matches(query):
            return {"found": False, "query": query,
                    "disease_id": f"UNRESOLVED:{digest(query)[:8]}",
                    "name": query, "mesh_id": ""}
        d = scenario.disease
        return {"found": True, "query": query, "disease_id": d["disease_id"],
                "name": d["name"], "mesh_id": d.get("mesh_id", "")}
    if tool == "search_targets":
        disease_id = params["disease_id"]
        if scenario is None or disease_id != scenario.disease["disease_id"]:
            return {"disease_id": disease_id, "candidates": [], "count": 0,
                    "recommended": None}
        candidates = scenario.targets()
        return {"disease_id": disease_id, "candidates": candidates,
                "count": len(candidates),
                "recommended": scenario.recommended_target()}
    raise ToolError("unknown_tool", tool)


def _literature(tool: str, params: dict, ctx: dict) -> Any:
    if tool != "search_literature":
        raise ToolError("unknown_tool", tool)
    query = params["query"]
    limit = params.get("limit", 5)
    scenario = _scenario(ctx)
    tag = scenario.scenario_id if scenario else "general"
    hits = []
    for i in range(limit):
        key = digest(f"{tag}|{query}|{i}")[:8]
        hits.append({
            "id": f"LIT:{key}",
            "title": f"Evidence review {i + 1} for {query}",
            "snippet": f"fixture literature record {key} discussing {query}",
        })
    return {"query": query, "hits": hits}


def _structures(tool: str, params: dict, ctx: dict) -> Any:
    scenario = _scenario(ctx)
    if tool == "list_structures":
        gene = params["gene"]
        structures: list[dict] = []
        proposed = None
        if scenario:
            for target in scenario.targets():
                if target["symbol"].upper() == gene.upper():
                    structures = [dict(s) for s in target.get("structures", [])]
                    break
        for s in structures:
            if s.get("preferred"):
                proposed = s["pdb_id"]
        if proposed is None and structures:
            proposed = structures[0]["pdb_id"]
        return {"gene": gene, "structures": structures, "proposed": proposed}
    if tool == "fetch_structure":
        pdb_id = params["pdb_id"].strip().upper()
        record = None
        if scenario:
            for target in scenario.targets():
                for s in target.get("structures", []):
                    if s["pdb_id"].upper() == pdb_id:
                        record = dict(s)
        if record is None:
            record = {"pdb_id": pdb_id, "method": "X-ray diffraction",
                      "resolution": hash_in_range(1.8, 3.5, "res", pdb_id)}
        record["pdb_id"] = pdb_id
        record["prepared"] = False
        record["atoms"] = int(2500 + 5000 * hash_in_range(0, 1, "atoms", pdb_id))
        record["source_path"] = f"/workspace/structures/{pdb_id}.pdb"
        return record
    raise ToolError("unknown_tool", tool)


# ---------------------------------------------------------------------------
# computation-category servers
# ---------------------------------------------------------------------------

def _pocketfinder(tool: str, params: dict, ctx: dict) -> Any:
    if tool != "find_pockets":
        raise ToolError("unknown_tool", tool)
    scenario = _scenario(ctx)
    structure = params["structure"]
    strategy = params.get("strategy", "de_novo")
    if scenario is None:
        return {"structure": structure.get("pdb_id"), "count": 0,
                "pockets": [], "proposed_pocket": None}
    info = scenario.pockets()
    reference = info.get("reference")
    if reference and strategy in ("htvs",):
        proposed = {
            "center": reference["center"], "box": reference["box"],
            "confidence": 1.0, "source": "reference_ligand",
            "ligand": reference.get("ligand", ""),
        }
        return {"structure": structure.get("pdb_id"), "count": info["count"],
                "pockets": info["pockets"], "proposed_pocket": proposed,
                "pocket_source": "reference_ligand"}
    proposed = dict(info["top"]) if info.get("top") else None
    return {"structure": structure.get("pdb_id"), "count": info["count"],
            "pockets": info["pockets"], "proposed_pocket": proposed,
            "pocket_source": "predicted" if proposed else "none"}


def _generator(tool: str, params: dict, ctx: dict) -> Any:
    scenario = _scenario(ctx)
    if tool == "generate_molecules":
        pocket = params["pocket"]
        strategy = params.get("strategy", "de_novo")
        if scenario is None or strategy not in ("de_novo", "dual"):
            return {"strategy": strategy, "pocket": pocket, "molecules": [], "count": 0}
        molecules = scenario.generated_molecules()
        return {"strategy": strategy, "pocket": pocket,
                "molecules": molecules, "count": len(molecules)}
    if tool == "expand_molecules":
        mode = params["mode"]
        hits = params["hits"]
        if scenario is None:
            return {"mode": mode, "seeded_from": hits, "molecules": [], "count": 0}
        smiles_list = scenario.expansion_outputs().get(mode, [])
        molecules = [{"smiles": s} for s in smiles_list]
        return {"mode": mode, "seeded_from": [h.get("smiles") for h in hits],
                "molecules": molecules, "count": len(molecules)}
    raise ToolError("unknown_tool", tool)


def _htvs(tool: str, params: dict, ctx: dict) -> Any:
    scenario = _scenario(ctx)
    if tool == "screen_library":
        pocket = params["pocket"]
        strategy = params.get("strategy", "de_novo")
        top_fraction = params.get("top_fraction", 0.05)
        rows = scenario.htvs.get("rows", 0) if scenario else 0
        if scenario is None or strategy not in ("htvs", "dual") or rows <= 0:
            return {"strategy": strategy, "pocket": pocket, "screened": 0,
                    "returned": 0, "top": []}
        planted = scenario.htvs_planted()
        seed = scenario.htvs.get("seed", 5)
        scores: list[float] = [0.0] * rows
        for i in range(rows):
            scores[i] = hash_in_range(0.30, 0.895, seed, i)
        for idx, entry in enumerate(planted):
            scores[idx] = float(entry["dti"])
        top_n = int(rows * top_fraction)
        order = sorted(range(rows), key=lambda i: (-scores[i], i))[:top_n]
        top = []
        for i in order:
            if i < len(planted):
                smiles = planted[i]["smiles"]
            else:
                smiles = synth_smiles(random.Random((seed << 20) ^ i))
            top.append({"smiles": smiles, "dti": round(scores[i], 4)})
        return {"strategy": strategy, "pocket": pocket, "screened": rows,
                "returned": top_n, "top": top}
    if tool == "score_dti":
        molecules = params["molecules"]
        scores = []
        for smiles in molecules:
            dti = scenario.dti_score(smiles) if scenario else hash_in_range(
                0.3, 0.895, "dti", canonical_smiles(smiles))
            scores.append({"smiles": smiles, "dti": dti})
        return {"scores": scores, "count": len(scores)}
    raise ToolError("unknown_tool", tool)


def _properties(tool: str, params: dict, ctx: dict) -> Any:
    if tool != "predict_properties":
        raise ToolError("unknown_tool", tool)
    scenario = _scenario(ctx)
    profiles = []
    for smiles in params["molecules"]:
        if scenario is not None:
            endpoints = scenario.endpoint_profile(smiles)
        else:
            key = canonical_smiles(smiles)
            endpoints = {name: hash_in_range(0.05, 0.95, "prop", key, name)
                         for name in ("herg", "ames", "dili", "caco2", "ppb", "cyp")}
        profiles.append({"smiles": smiles, "endpoints": endpoints})
    return {"profiles": profiles, "count": len(profiles)}


def _docking(tool: str, params: dict, ctx: dict) -> Any:
    scenario = _scenario(ctx)
    if tool == "dock_molecule":
        smiles = params["smiles"]
        center = params["center"]
        box = params["box"]
        ordinal = ctx.get("ordinal", 0)
        key = canonical_smiles(smiles)
        if scenario is not None and ordinal in scenario.dock_anomaly_ordinals():
            score = 0.0
        else:
            pinned = scenario.pinned_dock(smiles) if scenario else None
            if pinned is not None:
                score = pinned
            else:
                lo, hi = scenario.dock_background_range() if scenario else (-8.3, -5.0)
                # background scores depend on the box geometry, so a corrected
                # pocket genuinely changes downstream results
                box_key = ",".join(f"{c:.1f}" for c in list(center) + list(box))
                score = round(hash_in_range(lo, hi, "dock", key, box_key), 2)
        return {"smiles": smiles, "dock_kcal_mol": score, "center": center,
                "box": box, "pose_path": f"/workspace/poses/{digest(key)[:10]}.sdf"}
    if tool == "rescore_binding":
        smiles = params["smiles"]
        key = canonical_smiles(smiles)
        return {"smiles": smiles,
                "binding_estimate": round(hash_in_range(-62.0, -18.0, "mmgbsa", key), 2)}
    raise ToolError("unknown_tool", tool)


def _optimizer(tool: str, params: dict, ctx: dict) -> Any:
    if tool != "propose_mutations":
        raise ToolError("unknown_tool", tool)
    scenario = _scenario(ctx)
    pool = params["pool"]
    members = pool.get("members", [])
    iteration_next = pool.get("iteration", 0) + 1
    per_member = scenario.lo.get("proposals_per_member", 4) if scenario else 4
    lo_seed = scenario.lo.get("seed", 41) if scenario else 41

    pool_scores = []
    for member in members:
        key = canonical_smiles(member["smiles"])
        pool_scores.append({
            "smiles": member["smiles"],
            "est_dock": member.get("est_dock", hash_in_range(-7.0, -5.5, lo_seed, key, "d")),
            "qed": member.get("qed", hash_in_range(0.50, 0.80, lo_seed, key, "q")),
            "sas": member.get("sas", hash_in_range(2.0, 5.0, lo_seed, key, "s")),
        })

    proposals = []
    for member in members:
        key = canonical_smiles(member["smiles"])
        for j in range(per_member):
            suffix = _MUTATION_SUFFIXES[
                int(hash_in_range(0, len(_MUTATION_SUFFIXES) - 1e-9,
                                  lo_seed, key, iteration_next, j))]
            smiles = member["smiles"] + suffix
            mkey = canonical_smiles(smiles)
            proposals.append({
                "smiles": smiles,
                "est_dock": hash_in_range(-7.5, -5.0, lo_seed, mkey, "d"),
                "qed": hash_in_range(0.40, 0.85, lo_seed, mkey, "q"),
                "sas": hash_in_range(2.0, 6.0, lo_seed, mkey, "s"),
            })
    winner = (scenario.lo.get("winner") if scenario else None) or {}
    if winner and iteration_next == winner.get("iteration", 1) and proposals:
        entry = {"smiles": winner["smiles"], "est_dock": winner["est_dock"],
                 "qed": winner["qed"], "sas": winner["sas"]}
        entry.update(winner.get("extra", {}))
        proposals[0] = entry
    return {"iteration": iteration_next, "proposals": proposals,
            "pool_scores": pool_scores, "count": len(proposals)}


# ---------------------------------------------------------------------------
# filesystem-category server
# ---------------------------------------------------------------------------

def _workspace(tool: str, params: dict, ctx: dict) -> Any:
    fabric = ctx["fabric"]
    if tool == "write_file":
        path = params["path"]
        content = params["content"]
        fabric.workspace[path] = content
        return {"path": path, "bytes": len(content)}
    if tool == "read_file":
        path = params["path"]
        if path not in fabric.workspace:
            raise ToolError("not_found", f"no such workspace file: {path}")
        return {"path": path, "content": fabric.workspace[path]}
    if tool == "list_dir":
        prefix = params.get("path", "/")
        entries = sorted(p for p in fabric.workspace if p.startswith(prefix))
        return {"path": prefix, "entries": entries}
    raise ToolError("unknown_tool", tool)


_DISPATCH = {
    "target-knowledge": _knowledge,
    "literature": _literature,
    "structures": _structures,
    "pocketfinder": _pocketfinder,
    "generator": _generator,
    "htvs": _htvs,
    "properties": _properties,
    "docking": _docking,
    "optimizer": _optimizer,
    "workspace": _workspace,
}


def default_handlers() -> dict:
    """server_id -> fabric Handler for every shipped simulated server."""
    def bind(server_id: str):
        impl = _DISPATCH[server_id]

        def handler(sid: str, tool: str, params: dict, ordinal: int, ctx: dict) -> Any:
            ctx = dict(ctx)
            ctx["ordinal"] = ordinal
            return impl(tool, params, ctx)

        return handler

    return {server_id: bind(server_id) for server_id in _DISPATCH}
