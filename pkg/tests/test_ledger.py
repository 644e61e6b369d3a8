import pytest

from dualplane.errors import UnknownArtifact, UnknownParent
from dualplane.ledger import ArtifactLedger, lineage, put_artifact


@pytest.fixture()
def ledger():
    return ArtifactLedger(session="s1")


def test_put_and_lineage_depth_two(ledger):
    raw = put_artifact(ledger, {"pdb_id": "3V4V", "prepared": False},
                       producer="ResearchWorker:structures/fetch_structure")
    prepared = put_artifact(ledger, {"pdb_id": "3V4V", "prepared": True},
                            parents=(raw,), producer="node:ti/prepare")
    chain = lineage(ledger, prepared)
    assert [r.artifact_id for r in chain] == [raw, prepared]
    assert chain[0].created_at < chain[1].created_at


def test_put_is_idempotent_for_identical_content(ledger):
    a = put_artifact(ledger, {"x": 1})
    b = put_artifact(ledger, {"x": 1})
    assert a == b
    assert len(ledger.records) == 1


def test_unknown_parent_rejected(ledger):
    with pytest.raises(UnknownParent):
        put_artifact(ledger, {"x": 1}, parents=("0" * 64,))


def test_root_artifact_single_node_lineage(ledger):
    root = put_artifact(ledger, "disease: sepsis")
    assert len(lineage(ledger, root)) == 1


def test_unknown_artifact(ledger):
    with pytest.raises(UnknownArtifact):
        lineage(ledger, "f" * 64)


def test_lineage_is_acyclic_and_topological(ledger):
    a = put_artifact(ledger, "a")
    b = put_artifact(ledger, "b", parents=(a,))
    c = put_artifact(ledger, "c", parents=(a, b))
    chain = lineage(ledger, c)
    seen = set()
    for record in chain:
        assert all(p in seen for p in record.parent_ids)
        seen.add(record.artifact_id)
    assert ledger.verify_acyclic()


def test_chain_extends_never_rewrites(ledger):
    a = put_artifact(ledger, "a")
    chain_1 = list(ledger.chain)
    b = put_artifact(ledger, "b", parents=(a,))
    chain_2 = list(ledger.chain)
    assert chain_2[:len(chain_1)] == chain_1
    ledger.mark_superseded(b)
    chain_3 = list(ledger.chain)
    assert chain_3[:len(chain_2)] == chain_2
    assert len(chain_3) == len(chain_2) + 1
    assert ledger.live_ids() == [a]


def test_save_and_load_roundtrip(tmp_path, ledger):
    a = put_artifact(ledger, {"k": "v"}, producer="p")
    put_artifact(ledger, {"k2": 2}, parents=(a,), producer="q")
    ledger.save(tmp_path)
    loaded = ArtifactLedger.load("s1", tmp_path)
    assert set(loaded.records) == set(ledger.records)
    assert loaded.get_json(a) == {"k": "v"}
    assert loaded.lineage(list(loaded.records)[-1])


def test_export_bundle(tmp_path, ledger):
    put_artifact(ledger, "content")
    out = ledger.export_bundle(tmp_path / "bundle", trajectory_json={"records": []})
    assert (out / "records.jsonl").exists()
    assert (out / "trajectory.json").exists()
    assert (out / "objects").is_dir()
