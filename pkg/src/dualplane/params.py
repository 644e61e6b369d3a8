"""Tool-call parameter validation against declared schemas.

Rejecting malformed calls *before* dispatch is what keeps hallucinated
parameters (unknown names, wrong types, missing requireds) from ever
reaching a server. Validation fills defaults for absent optionals and is
idempotent: validating a ValidatedCall returns it unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Mapping

from .errors import ParamValidationError
from .types import Action, ActionKind, ParamSpec, ToolDescriptor

SEMANTIC_TYPES = (
    "string",
    "integer",
    "float",
    "boolean",
    "path",
    "smiles",
    "pdb_id",
    "coordinates3",
    "record",
)


def smiles_is_balanced(s: str) -> bool:
    """Syntactic molecule-string check: balanced parentheses/brackets and
    paired ring-closure digits (digits inside square brackets are atom
    annotations, not ring bonds)."""
    if not s or s != s.strip():
        s = s.strip()
        if not s:
            return False
    depth = 0
    in_bracket = False
    ring_counts: dict[str, int] = {}
    i = 0
    while i < len(s):
        ch = s[i]
        if in_bracket:
            if ch == "]":
                in_bracket = False
            elif ch == "[":
                return False
            i += 1
            continue
        if ch == "[":
            in_bracket = True
        elif ch == "]":
            return False
        elif ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                return False
        elif ch == "%":
            # two-digit ring closure token
            token = s[i + 1:i + 3]
            if len(token) != 2 or not token.isdigit():
                return False
            ring_counts[token] = ring_counts.get(token, 0) + 1
            i += 3
            continue
        elif ch.isdigit():
            ring_counts[ch] = ring_counts.get(ch, 0) + 1
        i += 1
    if depth != 0 or in_bracket:
        return False
    return all(count % 2 == 0 for count in ring_counts.values())


def _is_finite_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


def check_semantic(value: Any, semantic_type: str) -> bool:
    """True iff ``value`` structurally matches ``semantic_type``."""
    if semantic_type.startswith("list-of-"):
        inner = semantic_type[len("list-of-"):]
        return isinstance(value, (list, tuple)) and all(check_semantic(v, inner) for v in value)
    if semantic_type == "string":
        return isinstance(value, str)
    if semantic_type == "integer":
        return isinstance(value, int) and not isinstance(value, bool)
    if semantic_type == "float":
        return _is_finite_number(value)
    if semantic_type == "boolean":
        return isinstance(value, bool)
    if semantic_type == "path":
        return isinstance(value, str) and bool(value) and "\n" not in value
    if semantic_type == "smiles":
        return isinstance(value, str) and smiles_is_balanced(value)
    if semantic_type == "pdb_id":
        return isinstance(value, str) and len(value.strip()) == 4 and value.strip().isalnum()
    if semantic_type == "coordinates3":
        return (
            isinstance(value, (list, tuple))
            and len(value) == 3
            and all(_is_finite_number(v) for v in value)
        )
    if semantic_type == "record":
        return isinstance(value, Mapping)
    raise ValueError(f"unknown semantic type: {semantic_type}")


@dataclass(frozen=True)
class ValidatedCall:
    """A tool call that passed schema validation, defaults filled."""

    tool: ToolDescriptor
    params: tuple[tuple[str, Any], ...]

    @property
    def params_dict(self) -> dict:
        return dict(self.params)

    @property
    def tool_ref(self) -> str:
        return self.tool.ref


def _freeze_params(params: Mapping[str, Any]) -> tuple[tuple[str, Any], ...]:
    return tuple(sorted(params.items(), key=lambda kv: kv[0]))


def validate_params(call: Action | ValidatedCall | Mapping[str, Any],
                    tool: ToolDescriptor) -> ValidatedCall:
    """Validate ``call`` against ``tool.param_schema``.

    Raises ParamValidationError with kind ``unknown_param``,
    ``missing_required`` or ``type_mismatch``; the call is never dispatched
    on failure.
    """
    if isinstance(call, ValidatedCall):
        if call.tool.ref == tool.ref:
            return call
        raise ParamValidationError("unknown_param", call.tool.ref,
                                   f"validated call bound to {call.tool.ref}, not {tool.ref}")
    if isinstance(call, Action):
        if call.kind is not ActionKind.TOOL_CALL:
            raise ParamValidationError("type_mismatch", "kind", "action is not a tool call")
        params = call.params_dict
    else:
        params = dict(call)

    schema: dict[str, ParamSpec] = {p.name: p for p in tool.param_schema}
    for name in params:
        if name not in schema:
            raise ParamValidationError("unknown_param", name,
                                       f"tool {tool.ref} has no parameter {name!r}")
    filled: dict[str, Any] = {}
    for spec in tool.param_schema:
        if spec.name in params:
            value = params[spec.name]
        elif spec.required:
            raise ParamValidationError("missing_required", spec.name,
                                       f"tool {tool.ref} requires parameter {spec.name!r}")
        else:
            value = spec.default
            if value is None:
                continue
        if not check_semantic(value, spec.semantic_type):
            raise ParamValidationError(
                "type_mismatch", spec.name,
                f"parameter {spec.name!r} is not a valid {spec.semantic_type}")
        filled[spec.name] = value
    return ValidatedCall(tool=tool, params=_freeze_params(filled))
