"""Append-only artifact ledger with provenance lineage.

Artifacts are content-addressed (id = digest of content); every put records
which producer, parameters and parent artifacts generated it. Records are
never deleted or mutated: rollback flips a ``superseded`` flag and the
running digest chain only ever extends.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .errors import UnknownArtifact, UnknownParent
from .types import Digest, canonical_json, digest, digest_json


@dataclass
class ProvenanceRecord:
    artifact_id: Digest
    parent_ids: tuple[Digest, ...]
    producer: str
    params_digest: Digest
    session: str
    created_at: int  # logical step counter, the ordering authority
    superseded: bool = False

    def to_json(self) -> dict:
        return {
            "artifact_id": self.artifact_id,
            "parent_ids": list(self.parent_ids),
            "producer": self.producer,
            "params_digest": self.params_digest,
            "session": self.session,
            "created_at": self.created_at,
            "superseded": self.superseded,
        }

    @classmethod
    def from_json(cls, data: dict) -> "ProvenanceRecord":
        return cls(
            artifact_id=data["artifact_id"],
            parent_ids=tuple(data["parent_ids"]),
            producer=data["producer"],
            params_digest=data["params_digest"],
            session=data["session"],
            created_at=data["created_at"],
            superseded=data.get("superseded", False),
        )


@dataclass
class ArtifactLedger:
    """Per-session artifact store. Single writer per session; readers are free."""

    session: str
    records: dict[Digest, ProvenanceRecord] = field(default_factory=dict)
    contents: dict[Digest, str] = field(default_factory=dict)
    order: list[Digest] = field(default_factory=list)
    chain: list[Digest] = field(default_factory=list)
    _counter: int = 0

    # -- write path ---------------------------------------------------------

    def put_artifact(self, content: Any, parents: tuple[Digest, ...] = (),
                     producer: str = "", params: Any = None) -> Digest:
        """Store ``content`` (JSON-able or str) and its provenance.

        Idempotent for identical content + lineage; raises UnknownParent if
        a declared parent is absent.
        """
        for parent in parents:
            if parent not in self.records:
                raise UnknownParent(parent)
        serialized = content if isinstance(content, str) else canonical_json(content)
        artifact_id = digest(serialized)
        params_digest = digest_json(params) if params is not None else digest("")
        if artifact_id in self.records:
            existing = self.records[artifact_id]
            if existing.superseded:
                # re-created after a rollback: live again, recorded on the chain
                existing.superseded = False
                self._extend_chain(existing)
            # same content, possibly different lineage: content addressing
            # wins and the id is identical either way
            return artifact_id
        self._counter += 1
        record = ProvenanceRecord(
            artifact_id=artifact_id,
            parent_ids=tuple(parents),
            producer=producer,
            params_digest=params_digest,
            session=self.session,
            created_at=self._counter,
        )
        self.records[artifact_id] = record
        self.contents[artifact_id] = serialized
        self.order.append(artifact_id)
        self._extend_chain(record)
        return artifact_id

    def _extend_chain(self, record: ProvenanceRecord) -> None:
        prev = self.chain[-1] if self.chain else digest("")
        self.chain.append(digest(prev + digest_json(record.to_json())))

    def mark_superseded(self, artifact_id: Digest) -> None:
        record = self.records.get(artifact_id)
        if record is None:
            raise UnknownArtifact(artifact_id)
        if not record.superseded:
            record.superseded = True
            self._extend_chain(record)

    # -- read path ----------------------------------------------------------

    def has(self, artifact_id: Digest) -> bool:
        return artifact_id in self.records

    def get_content(self, artifact_id: Digest) -> str:
        if artifact_id not in self.contents:
            raise UnknownArtifact(artifact_id)
        return self.contents[artifact_id]

    def get_json(self, artifact_id: Digest) -> Any:
        return json.loads(self.get_content(artifact_id))

    def live_ids(self) -> list[Digest]:
        return sorted(a for a in self.records if not self.records[a].superseded)

    def visibility_digest(self) -> Digest:
        """Digest of the currently visible (non-superseded) artifact set."""
        return digest_json(self.live_ids())

    def lineage(self, artifact_id: Digest) -> list[ProvenanceRecord]:
        """Full ancestor closure of ``artifact_id``, topologically ordered
        (parents before children)."""
        if artifact_id not in self.records:
            raise UnknownArtifact(artifact_id)
        seen: set[Digest] = set()
        out: list[ProvenanceRecord] = []

        def visit(aid: Digest) -> None:
            if aid in seen:
                return
            seen.add(aid)
            record = self.records[aid]
            for parent in record.parent_ids:
                visit(parent)
            out.append(record)

        visit(artifact_id)
        return out

    def verify_acyclic(self) -> bool:
        """Parents always precede children on the logical clock, which rules
        out cycles; verify it anyway by walking every record."""
        for record in self.records.values():
            for parent in record.parent_ids:
                if self.records[parent].created_at >= record.created_at:
                    return False
        return True

    # -- persistence ---------------------------------------------------------

    def save(self, directory: Path) -> None:
        directory = Path(directory)
        (directory / "objects").mkdir(parents=True, exist_ok=True)
        with (directory / "records.jsonl").open("w", encoding="utf-8") as fh:
            for aid in self.order:
                fh.write(canonical_json(self.records[aid].to_json()) + "\n")
        for aid in self.order:
            (directory / "objects" / aid).write_text(self.contents[aid], encoding="utf-8")

    @classmethod
    def load(cls, session: str, directory: Path) -> "ArtifactLedger":
        ledger = cls(session=session)
        directory = Path(directory)
        records_path = directory / "records.jsonl"
        if not records_path.exists():
            return ledger
        for line in records_path.read_text(encoding="utf-8").splitlines():
            record = ProvenanceRecord.from_json(json.loads(line))
            ledger.records[record.artifact_id] = record
            ledger.order.append(record.artifact_id)
            ledger._extend_chain(record)
            ledger._counter = max(ledger._counter, record.created_at)
            obj = directory / "objects" / record.artifact_id
            if obj.exists():
                ledger.contents[record.artifact_id] = obj.read_text(encoding="utf-8")
        return ledger

    def export_bundle(self, directory: Path, trajectory_json: dict | None = None) -> Path:
        """Emit a portable audit bundle (records + contents + trajectory)."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        self.save(directory)
        if trajectory_json is not None:
            (directory / "trajectory.json").write_text(
                json.dumps(trajectory_json, indent=2, sort_keys=True), encoding="utf-8")
        return directory


def put_artifact(ledger: ArtifactLedger, content: Any, parents: tuple[Digest, ...] = (),
                 producer: str = "", params: Any = None) -> Digest:
    return ledger.put_artifact(content, parents=parents, producer=producer, params=params)


def lineage(ledger: ArtifactLedger, artifact_id: Digest) -> list[ProvenanceRecord]:
    return ledger.lineage(artifact_id)
