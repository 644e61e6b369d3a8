"""Molecule bookkeeping: canonical keys, similarity, fusion and clustering.

Chemistry here is deliberately shallow. Molecules are syntactically checked
strings; the fingerprint is a character n-gram set over the canonical string
and similarity is plain Tanimoto on those sets. That is enough to exercise
dedup, fusion and diversity clustering deterministically without a chemistry
stack, and the behavior is documented as a stand-in.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence

NGRAM_DEFAULT = 3
SIMILARITY_THRESHOLD_DEFAULT = 0.6


def canonical_smiles(smiles: str) -> str:
    """Dedup key: whitespace-stripped, uppercase-normalized string."""
    return "".join(smiles.split()).upper()


def fingerprint(smiles: str, n: int = NGRAM_DEFAULT) -> frozenset[str]:
    s = canonical_smiles(smiles)
    if len(s) <= n:
        return frozenset([s]) if s else frozenset()
    return frozenset(s[i:i + n] for i in range(len(s) - n + 1))


def tanimoto(a: frozenset[str], b: frozenset[str]) -> float:
    if not a and not b:
        return 1.0
    inter = len(a & b)
    union = len(a | b)
    return inter / union if union else 0.0


@dataclass
class ScoredMolecule:
    """A molecule plus whatever scores it has accumulated along the way."""

    smiles: str
    scores: dict = field(default_factory=dict)
    provenance: list[str] = field(default_factory=list)
    failed: str | None = None

    @property
    def key(self) -> str:
        return canonical_smiles(self.smiles)

    def primary_score(self) -> float:
        """The [0,1]-comparable score used for fusion ranking: the deep
        interaction score when present, else the generator score."""
        if "dti" in self.scores:
            return float(self.scores["dti"])
        return float(self.scores.get("gen_score", 0.0))

    def to_json(self) -> dict:
        data = {"smiles": self.smiles, "scores": dict(self.scores),
                "provenance": list(self.provenance)}
        if self.failed:
            data["failed"] = self.failed
        return data

    @classmethod
    def from_json(cls, data: dict) -> "ScoredMolecule":
        return cls(smiles=data["smiles"], scores=dict(data.get("scores", {})),
                   provenance=list(data.get("provenance", [])),
                   failed=data.get("failed"))


def fuse_and_rerank(list_a: Sequence[ScoredMolecule],
                    list_b: Sequence[ScoredMolecule]) -> list[ScoredMolecule]:
    """Fuse two scored streams: dedup on canonical smiles, keep the max
    primary score per duplicate, union provenance, rank by primary score
    descending with canonical-smiles ascending tie-break."""
    merged: dict[str, ScoredMolecule] = {}
    for mol in list(list_a) + list(list_b):
        key = mol.key
        if key not in merged:
            merged[key] = ScoredMolecule(
                smiles=mol.smiles,
                scores=dict(mol.scores),
                provenance=list(dict.fromkeys(mol.provenance)),
                failed=mol.failed,
            )
            continue
        kept = merged[key]
        if mol.primary_score() > kept.primary_score():
            kept.smiles = mol.smiles
            merged_scores = dict(mol.scores)
            for k, v in kept.scores.items():
                merged_scores.setdefault(k, v)
            kept.scores = merged_scores
        else:
            for k, v in mol.scores.items():
                kept.scores.setdefault(k, v)
        for p in mol.provenance:
            if p not in kept.provenance:
                kept.provenance.append(p)
    return sorted(merged.values(), key=lambda m: (-m.primary_score(), m.key))


def cluster_representatives(molecules: Sequence[ScoredMolecule],
                            similarity_threshold: float = SIMILARITY_THRESHOLD_DEFAULT,
                            k: int = 20,
                            ngram: int = NGRAM_DEFAULT) -> list[ScoredMolecule]:
    """Greedy leader clustering for diversity.

    Molecules are visited in primary-score order (desc, canonical-smiles
    asc); one joins the first leader with similarity >= threshold, else it
    becomes a leader. The top-k leaders are returned. Later molecules can
    only join existing clusters or found clusters past k, so iteration stops
    once k leaders exist.
    """
    if not 0 < similarity_threshold < 1:
        raise ValueError("similarity_threshold must be in (0, 1)")
    ordered = sorted(molecules, key=lambda m: (-m.primary_score(), m.key))
    leaders: list[ScoredMolecule] = []
    prints: list[frozenset[str]] = []
    for mol in ordered:
        fp = fingerprint(mol.smiles, ngram)
        if not any(tanimoto(fp, lead_fp) >= similarity_threshold for lead_fp in prints):
            leaders.append(mol)
            prints.append(fp)
            if len(leaders) >= k:
                break
    return leaders


# ---------------------------------------------------------------------------
# deterministic molecule synthesis for fixtures
# ---------------------------------------------------------------------------

_CHAIN_ATOMS = ["C", "C", "C", "N", "O", "S", "F", "Cl", "Br"]
_RING_TEMPLATES = [
    ("C{r}CCCCC{r}", 0), ("C{r}CCCC{r}", 0), ("c{r}ccccc{r}", 0),
    ("c{r}ccncc{r}", 0), ("C{r}CNCC{r}", 0), ("c{r}cncnc{r}", 0),
    ("C{r}COCC{r}", 0), ("c{r}cscc{r}", 0), ("C{r}CC{r}", 0),
]
_DECORATIONS = ["C", "O", "N", "F", "CC", "OC", "C(=O)O", "C(=O)N", "S(=O)(=O)N", "C#N", "OC(F)F"]


def synth_smiles(rng: random.Random) -> str:
    """Generate a syntactically balanced fixture molecule string.

    Construction guarantees paired ring digits and balanced parentheses, and
    the mixed templates keep pairwise n-gram similarity low enough for
    leader clustering to see distinct scaffolds.
    """
    parts: list[str] = []
    ring_digit = 1
    n_rings = rng.choice([1, 1, 2, 2, 3])
    for _ in range(n_rings):
        template, _ = _RING_TEMPLATES[rng.randrange(len(_RING_TEMPLATES))]
        ring = template.format(r=ring_digit)
        ring_digit += 1
        if parts and rng.random() < 0.6:
            parts.append(rng.choice(["C", "CC", "O", "N", "C(=O)"]))
        parts.append(ring)
    decorated = "".join(parts)
    for _ in range(rng.randrange(0, 3)):
        decorated += "(" + rng.choice(_DECORATIONS) + ")"
    tail_len = rng.randrange(0, 5)
    tail = "".join(rng.choice(_CHAIN_ATOMS) for _ in range(tail_len))
    return decorated + tail


def synth_unique_smiles(seed: int, count: int, taken: Iterable[str] = ()) -> list[str]:
    """Deterministically synthesize ``count`` distinct molecules, avoiding
    canonical-key collisions with ``taken``."""
    rng = random.Random(seed)
    seen = {canonical_smiles(s) for s in taken}
    out: list[str] = []
    while len(out) < count:
        smiles = synth_smiles(rng)
        key = canonical_smiles(smiles)
        if key in seen:
            continue
        seen.add(key)
        out.append(smiles)
    return out
