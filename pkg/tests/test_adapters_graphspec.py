import json

import pytest

from dualplane.adapters import ContractEntry, adapt_format, adapt_value
from dualplane.errors import AdapterError, GraphValidationError
from dualplane.graphspec import build_graph, load_graph


# ---------------------------------------------------------------------------
# adapt_format
# ---------------------------------------------------------------------------

def test_pdb_id_canonicalized():
    assert adapt_format(" 3v4v ", ContractEntry("pdb", "pdb_id")) == "3V4V"


def test_unbalanced_molecule_rejected():
    with pytest.raises(AdapterError) as err:
        adapt_format("C1CC1(", ContractEntry("smiles", "smiles"))
    assert "unbalanced" in err.value.reason


def test_coordinates_accept_string_form():
    value = adapt_format("[161.2, 205.8, 151.3]", ContractEntry("center", "coordinates3"))
    assert value == [161.2, 205.8, 151.3]


def test_coordinates_reject_two_vector():
    with pytest.raises(AdapterError):
        adapt_format([1.0, 2.0], ContractEntry("center", "coordinates3"))


def test_pocket_record_checks():
    pocket = {"center": [1.0, 2.0, 3.0], "box": [20, 20, 20],
              "confidence": 0.95, "source": "predicted"}
    adapted = adapt_format(pocket, ContractEntry("pocket", "pocket"))
    assert adapted["box"] == [20.0, 20.0, 20.0]
    with pytest.raises(AdapterError):
        adapt_format(dict(pocket, box=[0, 20, 20]), ContractEntry("pocket", "pocket"))
    with pytest.raises(AdapterError):
        adapt_format(dict(pocket, confidence=1.4), ContractEntry("pocket", "pocket"))
    with pytest.raises(AdapterError):
        adapt_format(dict(pocket, source="guessed"), ContractEntry("pocket", "pocket"))


def test_prepared_constraint_blocks_raw_structures():
    entry = ContractEntry("structure", "structure", ("prepared",))
    with pytest.raises(AdapterError):
        adapt_format({"pdb_id": "3V4V", "prepared": False}, entry)
    ok = adapt_format({"pdb_id": "3v4v", "prepared": True}, entry)
    assert ok["pdb_id"] == "3V4V"


def test_list_of_types():
    assert adapt_value("xs", ["CCO", " CCN "], "list-of-smiles") == ["CCO", "CCN"]
    with pytest.raises(AdapterError):
        adapt_value("xs", ["CCO", "C1CC"], "list-of-smiles")


def test_missing_value_blocks_node():
    with pytest.raises(AdapterError):
        adapt_format(None, ContractEntry("k", "string"))


# ---------------------------------------------------------------------------
# build_graph
# ---------------------------------------------------------------------------

def test_shipped_ti_graph_valid():
    graph = load_graph("ti")
    assert graph.entry == "normalize"
    assert "prepare" in graph.exits
    assert graph.topo_index["normalize"] == 0


@pytest.fixture()
def tiny_doc():
    return {
        "name": "t",
        "entry": "a",
        "exits": ["b"],
        "nodes": {
            "a": {"kind": "transform", "transform": "noop",
                  "inputs": [["x", "integer", []]],
                  "outputs": [["y", "integer", []]]},
            "b": {"kind": "transform", "transform": "noop",
                  "inputs": [["y", "integer", []]],
                  "outputs": [["z", "integer", []]]},
        },
        "edges": [{"from": "a", "to": "b", "key": "y"}],
        "cycle_bounds": [],
    }


def test_contract_mismatch_on_unknown_consumer_key(tiny_doc):
    tiny_doc["edges"][0]["key"] = "pocket"
    tiny_doc["nodes"]["a"]["outputs"].append(["pocket", "record", []])
    with pytest.raises(GraphValidationError) as err:
        build_graph(tiny_doc)
    assert err.value.kind == "contract_mismatch"


def test_dangling_edge_detected(tiny_doc):
    tiny_doc["edges"].append({"from": "a", "to": "ghost", "key": "y"})
    with pytest.raises(GraphValidationError) as err:
        build_graph(tiny_doc)
    assert err.value.kind == "dangling_edge"


def test_unbounded_cycle_rejected():
    doc = json.loads(json.dumps({
        "name": "loop", "entry": "a", "exits": ["a"],
        "nodes": {
            "a": {"kind": "transform", "transform": "noop",
                  "inputs": [["x", "integer", []]], "outputs": [["x", "integer", []]]},
            "b": {"kind": "transform", "transform": "noop",
                  "inputs": [["x", "integer", []]], "outputs": [["x", "integer", []]]},
        },
        "edges": [{"from": "a", "to": "b", "key": "x"},
                  {"from": "b", "to": "a", "key": "x"}],
        "cycle_bounds": [],
    }))
    with pytest.raises(GraphValidationError) as err:
        build_graph(doc)
    assert err.value.kind == "unbounded_cycle"
    # declaring the bound makes the same topology valid
    doc["cycle_bounds"] = [{"from": "b", "to": "a", "bound": 3}]
    graph = build_graph(doc)
    assert graph.cycle_bounds == {("b", "a"): 3}


def test_lo_graph_without_bound_is_unbounded():
    from importlib import resources
    doc = json.loads(resources.files("dualplane")
                     .joinpath("data/graphs/lo.graph").read_text("utf-8"))
    doc["cycle_bounds"] = []
    with pytest.raises(GraphValidationError) as err:
        build_graph(doc)
    assert err.value.kind == "unbounded_cycle"


def test_gate_must_abort_run(tiny_doc):
    tiny_doc["nodes"]["a"] = {
        "kind": "gate",
        "gate": {"gate_id": "g", "prompt": "p", "editable": []},
        "inputs": [["y", "integer", []]],
        "outputs": [["y", "integer", []]],
        "on_failure": "abort_branch",
    }
    with pytest.raises(GraphValidationError):
        build_graph(tiny_doc)


def test_empty_contracts_rejected_except_passthrough(tiny_doc):
    tiny_doc["nodes"]["a"]["inputs"] = []
    with pytest.raises(GraphValidationError):
        build_graph(tiny_doc)


def test_all_shipped_graphs_parse():
    for name in ("ti", "hi", "h2l", "lo"):
        graph = load_graph(name)
        assert graph.name == name
