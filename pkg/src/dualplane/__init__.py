"""dualplane: a governed dual-plane orchestration engine.

A control plane (intent routing, bounded supervisor loop, role-governed
workers) drives a workflow plane (stateful skill graphs with data contracts,
human gates, checkpoints and failure containment) over a federated registry
of deterministic simulated tool servers, with full provenance and replay.
"""

__version__ = "0.1.0"

from .types import (Action, AgentRole, PermissionPolicy, PolicyMode,             # noqa: F401
                    ToolCategory, ToolDescriptor, Trajectory, digest)
from .fabric import InvocationBudget, ToolResult, alternation_guard             # noqa: F401
from .molecules import ScoredMolecule, cluster_representatives, fuse_and_rerank  # noqa: F401
from .skills import composite_reward                                            # noqa: F401
from .bench import BenchTask, score_suite, smape                                # noqa: F401
