import pytest

from dualplane.engine import GatePolicy
from dualplane.manifests import load_manifest_dir
from dualplane.reasoner import ScriptedReasoner
from dualplane.registry import ToolRegistry
from dualplane.scenarios import load_scenarios
from dualplane.session import SessionConfig, create_session
from dualplane.types import PermissionPolicy


@pytest.fixture(scope="session")
def scenario_store():
    return load_scenarios()


@pytest.fixture(scope="session")
def scenario_patterns(scenario_store):
    return [p for sc in scenario_store.scenarios for p in sc.query_patterns]


@pytest.fixture()
def registry():
    reg = ToolRegistry()
    for manifest in load_manifest_dir():
        reg.register(manifest)
    return reg


@pytest.fixture()
def reasoner(scenario_patterns):
    return ScriptedReasoner.from_file(scenario_patterns=scenario_patterns)


@pytest.fixture()
def make_session(reasoner):
    """Factory: make_session(query, seed=0, gate_policy=auto, mode=strict)."""
    def factory(query, seed=0, gate_policy=None, mode="strict", **kwargs):
        config = SessionConfig(
            seed=seed,
            policy=PermissionPolicy.make(mode),
            gate_policy=gate_policy or GatePolicy.auto(),
            **kwargs,
        )
        return create_session(query, config, reasoner=reasoner)
    return factory


CROHNS_QUERY = "Design a drug for Crohn's disease"
SEPSIS_QUERY = "Develop a therapeutic candidate for sepsis"
PARKINSONS_QUERY = "Design a novel drug for Parkinson's disease"


@pytest.fixture(scope="session")
def queries():
    return {"crohns": CROHNS_QUERY, "sepsis": SEPSIS_QUERY,
            "parkinsons": PARKINSONS_QUERY}
