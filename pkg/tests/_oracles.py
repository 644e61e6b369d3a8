"""Independent brute-force references shared by the unit and acceptance suites.

These deliberately re-derive expected results with different algorithms and
data layouts than the implementations they check, and they stay free of any
engine import beyond the molecule value type.
"""

from dualplane.molecules import (ScoredMolecule, canonical_smiles, fingerprint,
                                 tanimoto)


def oracle_fuse(list_a, list_b):
    order: list[str] = []
    best: dict[str, dict] = {}
    for mol in list(list_a) + list(list_b):
        key = canonical_smiles(mol.smiles)
        if key not in best:
            order.append(key)
            best[key] = {"smiles": mol.smiles, "primary": mol.primary_score(),
                         "prov": list(dict.fromkeys(mol.provenance))}
        else:
            record = best[key]
            if mol.primary_score() > record["primary"]:
                record["primary"] = mol.primary_score()
                record["smiles"] = mol.smiles
            for p in mol.provenance:
                if p not in record["prov"]:
                    record["prov"].append(p)
    ranked = sorted(order, key=lambda k: (-best[k]["primary"], k))
    return [(best[k]["smiles"], round(best[k]["primary"], 12), tuple(best[k]["prov"]))
            for k in ranked]


def oracle_cluster(molecules, threshold, k):
    ordered = sorted(molecules,
                     key=lambda m: (-m.primary_score(), canonical_smiles(m.smiles)))
    leaders = []
    for mol in ordered:   # exhaustive: no early stop
        fp = fingerprint(mol.smiles)
        assigned = False
        for leader in leaders:
            if tanimoto(fp, fingerprint(leader.smiles)) >= threshold:
                assigned = True
                break
        if not assigned:
            leaders.append(mol)
    return [m.smiles for m in leaders[:k]]


def random_molecules(rng, n, score_key="gen_score"):
    alphabet = "CNOccno123()=[]@+-"
    out = []
    for _ in range(n):
        length = rng.randint(3, 24)
        smiles = "".join(rng.choice(alphabet) for _ in range(length))
        out.append(ScoredMolecule(
            smiles=smiles,
            scores={score_key: round(rng.random(), 6)},
            provenance=[rng.choice(["generative", "screening", "expansion"])]))
    return out
