"""Format adapters: normalize-then-validate for values crossing node contracts.

Adapters are the reason malformed intermediates never reach a downstream
tool: identifiers are canonicalized, coordinate vectors parsed, molecule
strings checked for balance, and structure records checked for the
``prepared`` flag before anything sensitive consumes them. A failed
adaptation blocks the node and triggers its failure policy.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Mapping

from .errors import AdapterError
from .params import smiles_is_balanced


@dataclass(frozen=True)
class ContractEntry:
    key: str
    semantic_type: str
    constraints: tuple = ()

    @classmethod
    def from_json(cls, entry: list | tuple) -> "ContractEntry":
        key, semantic_type, constraints = entry
        return cls(key=key, semantic_type=semantic_type, constraints=tuple(constraints))


def _fail(key: str, reason: str):
    raise AdapterError(key, reason)


def _as_float(key: str, value: Any) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        _fail(key, f"expected number, got {type(value).__name__}")
    value = float(value)
    if not math.isfinite(value):
        _fail(key, "non-finite number")
    return value


def _adapt_coordinates(key: str, value: Any) -> list[float]:
    if isinstance(value, str):
        try:
            value = json.loads(value)
        except json.JSONDecodeError:
            _fail(key, "coordinates string is not parseable")
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        _fail(key, "coordinates must be a 3-vector")
    return [_as_float(key, v) for v in value]


def _adapt_pocket(key: str, value: Any) -> dict:
    if not isinstance(value, Mapping):
        _fail(key, "pocket must be a record")
    pocket = dict(value)
    pocket["center"] = _adapt_coordinates(f"{key}.center", pocket.get("center"))
    box = _adapt_coordinates(f"{key}.box", pocket.get("box"))
    if any(b <= 0 for b in box):
        _fail(f"{key}.box", "box dimensions must be positive")
    pocket["box"] = box
    confidence = _as_float(f"{key}.confidence", pocket.get("confidence", 0.0))
    if not 0.0 <= confidence <= 1.0:
        _fail(f"{key}.confidence", "confidence must be within [0, 1]")
    pocket["confidence"] = confidence
    source = pocket.get("source", "predicted")
    if source not in ("predicted", "reference_ligand"):
        _fail(f"{key}.source", f"unknown pocket source {source!r}")
    return pocket


def adapt_value(key: str, value: Any, semantic_type: str) -> Any:
    """Normalize + structurally validate one value; AdapterError on refusal."""
    if semantic_type.startswith("list-of-"):
        inner = semantic_type[len("list-of-"):]
        if not isinstance(value, (list, tuple)):
            _fail(key, "expected a list")
        return [adapt_value(f"{key}[{i}]", v, inner) for i, v in enumerate(value)]
    if semantic_type == "string":
        if not isinstance(value, str):
            _fail(key, f"expected string, got {type(value).__name__}")
        return value.strip()
    if semantic_type == "integer":
        if isinstance(value, bool) or not isinstance(value, int):
            _fail(key, "expected integer")
        return value
    if semantic_type == "float":
        return _as_float(key, value)
    if semantic_type == "boolean":
        if not isinstance(value, bool):
            _fail(key, "expected boolean")
        return value
    if semantic_type == "path":
        if not isinstance(value, str) or not value.strip() or "\n" in value:
            _fail(key, "expected a path string")
        return value.strip()
    if semantic_type == "pdb_id":
        if not isinstance(value, str):
            _fail(key, "expected structure identifier")
        canon = value.strip().upper()
        if len(canon) != 4 or not canon.isalnum():
            _fail(key, f"{value!r} is not a 4-character structure id")
        return canon
    if semantic_type == "smiles":
        if not isinstance(value, str):
            _fail(key, "expected molecule string")
        canon = value.strip()
        if not smiles_is_balanced(canon):
            _fail(key, "unbalanced")
        return canon
    if semantic_type == "coordinates3":
        return _adapt_coordinates(key, value)
    if semantic_type == "pocket":
        return _adapt_pocket(key, value)
    if semantic_type == "structure":
        if not isinstance(value, Mapping):
            _fail(key, "structure must be a record")
        record = dict(value)
        record["pdb_id"] = adapt_value(f"{key}.pdb_id", record.get("pdb_id", ""), "pdb_id")
        return record
    if semantic_type == "record":
        if not isinstance(value, Mapping):
            _fail(key, f"expected record, got {type(value).__name__}")
        return dict(value)
    _fail(key, f"unknown semantic type {semantic_type!r}")


def _check_constraint(key: str, value: Any, constraint: Any) -> None:
    name = constraint[0] if isinstance(constraint, (list, tuple)) else constraint
    if name == "positive":
        if not isinstance(value, (int, float)) or value <= 0:
            _fail(key, "must be positive")
    elif name == "nonempty":
        if hasattr(value, "__len__") and len(value) == 0:
            _fail(key, "must be non-empty")
    elif name == "prepared":
        # stand-in for the structure-repair check: downstream tools only
        # accept structures the preparation step has flagged
        if not (isinstance(value, Mapping) and value.get("prepared") is True):
            _fail(key, "structure is not prepared")
    elif name == "bounded01":
        if not isinstance(value, (int, float)) or not 0 <= value <= 1:
            _fail(key, "must be within [0, 1]")
    elif name == "range":
        lo, hi = constraint[1], constraint[2]
        if not isinstance(value, (int, float)) or not lo <= value <= hi:
            _fail(key, f"must be within [{lo}, {hi}]")
    else:
        _fail(key, f"unknown constraint {name!r}")


def adapt_format(value: Any, entry: ContractEntry) -> Any:
    """Adapt ``value`` to one contract entry: normalize, validate type,
    then check every constraint."""
    if value is None:
        _fail(entry.key, "value is missing")
    adapted = adapt_value(entry.key, value, entry.semantic_type)
    for constraint in entry.constraints:
        _check_constraint(entry.key, adapted, constraint)
    return adapted
