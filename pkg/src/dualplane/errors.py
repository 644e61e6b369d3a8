"""Exception hierarchy shared across the control plane, workflow plane and tool fabric.

Every error that crosses a module boundary gets a class here so callers can
dispatch on type instead of parsing messages. Error kinds that surface in
machine-readable output carry a stable ``code`` attribute.
"""

from __future__ import annotations


class DualPlaneError(Exception):
    """Base class for all engine errors."""

    code = "error"


# ---------------------------------------------------------------------------
# core model
# ---------------------------------------------------------------------------

class ParamValidationError(DualPlaneError):
    """A tool call does not conform to the tool's parameter schema.

    ``kind`` is one of ``unknown_param``, ``missing_required``,
    ``type_mismatch``.
    """

    code = "param_validation"

    def __init__(self, kind: str, param: str, message: str = ""):
        self.kind = kind
        self.param = param
        super().__init__(message or f"{kind}: {param}")


# ---------------------------------------------------------------------------
# tool fabric
# ---------------------------------------------------------------------------

class DuplicateServer(DualPlaneError):
    code = "duplicate_server"


class PermissionDenied(DualPlaneError):
    """Role attempted to touch a tool category outside its grants."""

    code = "permission_denied"

    def __init__(self, role: str, tool_ref: str, category: str):
        self.role = role
        self.tool_ref = tool_ref
        self.category = category
        super().__init__(f"role {role} may not invoke {tool_ref} (category={category})")


class BudgetExhausted(DualPlaneError):
    code = "budget_exhausted"


class ToolError(DualPlaneError):
    """An invocation failed inside the owning server (injected or organic)."""

    code = "tool_error"

    def __init__(self, kind: str, message: str = ""):
        self.kind = kind
        super().__init__(message or kind)


class AlternationViolation(DualPlaneError):
    code = "alternation_violation"


class ManifestMissing(DualPlaneError):
    code = "manifest_missing"


# ---------------------------------------------------------------------------
# workflow plane
# ---------------------------------------------------------------------------

class GraphValidationError(DualPlaneError):
    """Graph spec rejected; ``kind`` is one of ``dangling_edge``,
    ``contract_mismatch``, ``unbounded_cycle``."""

    code = "graph_validation"

    def __init__(self, kind: str, message: str):
        self.kind = kind
        super().__init__(f"{kind}: {message}")


class AdapterError(DualPlaneError):
    """A value crossing a node boundary failed its contract."""

    code = "adapter_error"

    def __init__(self, key: str, reason: str):
        self.key = key
        self.reason = reason
        super().__init__(f"{key}: {reason}")


class RunAborted(DualPlaneError):
    code = "run_aborted"

    def __init__(self, message: str, cause: Exception | None = None):
        self.cause = cause
        super().__init__(message)


class UnknownTicket(DualPlaneError):
    code = "unknown_ticket"


class TicketAlreadyResolved(DualPlaneError):
    code = "ticket_already_resolved"


class IllegalPatchKey(DualPlaneError):
    code = "illegal_patch_key"


class UnknownCheckpoint(DualPlaneError):
    code = "unknown_checkpoint"


# ---------------------------------------------------------------------------
# audit ledger
# ---------------------------------------------------------------------------

class UnknownParent(DualPlaneError):
    code = "unknown_parent"


class UnknownArtifact(DualPlaneError):
    code = "unknown_artifact"


# ---------------------------------------------------------------------------
# control plane
# ---------------------------------------------------------------------------

class PlanInfeasible(DualPlaneError):
    """A plan step requires tool categories no role holds under strict policy."""

    code = "plan_infeasible"


# ---------------------------------------------------------------------------
# discovery skills
# ---------------------------------------------------------------------------

class NoTargetsFound(DualPlaneError):
    code = "no_targets_found"


class NoPocketFound(DualPlaneError):
    code = "no_pocket_found"


class EmptyHitList(DualPlaneError):
    code = "empty_hit_list"


class MissingScore(DualPlaneError):
    code = "missing_score"

    def __init__(self, name: str):
        self.name = name
        super().__init__(f"required score absent: {name}")


# ---------------------------------------------------------------------------
# bench runner
# ---------------------------------------------------------------------------

class LengthMismatch(DualPlaneError):
    code = "length_mismatch"


class MissingResponse(DualPlaneError):
    code = "missing_response"
