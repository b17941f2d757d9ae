"""Durable file storage for trees, datasets, session logs, verifications and scores.

Every file format the system writes is pinned here:

    trees/v{N}.tree              digest-protected JSON tree documents
    sessions/{id}.log            JSONL: one session header + one record per turn
    verifications.log            JSONL, append-only (retrain rewrites atomically
                                 to stamp applied_in_version)
    satisfaction.log             JSONL, latest score per session wins
    datasets/{name}.csv          header row, "?" = missing, UTF-8
    datasets/{name}.schema.json  schema config (attributes, label column, classes)

All documents are UTF-8, newline-terminated, with sorted keys, so they are
human-diffable and byte-stable.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Optional, Union

from .data import (
    Dataset,
    MISSING_TOKEN,
    SchemaConfig,
    is_missing,
    load_dataset,
    schema_from_dict,
    schema_to_dict,
    value_from_json,
    value_to_json,
)
from .dialog import DialogSession, Turn, observed_values, utc_now
from .errors import (
    CorruptDocumentError,
    DialogTreeError,
    NotFoundError,
    VerificationError,
)
from .tree import ClassCounts, DecisionTree, Internal, Leaf, TreeNode

TREE_FORMAT = "dialogtree.tree/1"


# ---------------------------------------------------------------------------
# tree documents
# ---------------------------------------------------------------------------

def tree_to_doc(tree: DecisionTree) -> dict:
    nodes: dict[str, dict] = {}

    def walk(node: TreeNode) -> None:
        entry: dict = {
            "counts": {c: int(k) for c, k in sorted(node.counts.counts.items())},
            "total": node.counts.total,
        }
        if node.is_leaf:
            entry["leaf"] = node.body.majority_class
        else:
            entry["attribute"] = node.body.attribute
            entry["threshold"] = node.body.threshold
            entry["children"] = {e: c.id for e, c in sorted(node.body.children.items())}
            entry["edge_support"] = {e: int(s) for e, s in sorted(node.body.edge_support.items())}
            for child in node.body.children.values():
                walk(child)
        nodes[str(node.id)] = entry

    walk(tree.root)
    return {
        "format": TREE_FORMAT,
        "version": tree.version,
        "classes": list(tree.classes),
        "source_fingerprint": tree.source_fingerprint,
        "schema": [schema_to_dict(a) for a in tree.schema],
        "root": tree.root.id,
        "nodes": nodes,
    }


def tree_from_doc(doc: Mapping) -> DecisionTree:
    if doc.get("format") != TREE_FORMAT:
        raise CorruptDocumentError(f"unknown tree document format {doc.get('format')!r}")
    nodes = doc["nodes"]

    def build(node_id: int) -> TreeNode:
        entry = nodes[str(node_id)]
        counts = ClassCounts(dict(entry["counts"]), entry["total"])
        if "leaf" in entry:
            return TreeNode(id=node_id, counts=counts, body=Leaf(entry["leaf"]))
        children = {edge: build(child) for edge, child in entry["children"].items()}
        threshold = entry["threshold"]
        body = Internal(
            attribute=entry["attribute"],
            threshold=float(threshold) if threshold is not None else None,
            children=children,
            edge_support={e: int(s) for e, s in entry["edge_support"].items()},
        )
        return TreeNode(id=node_id, counts=counts, body=body)

    return DecisionTree(
        root=build(doc["root"]),
        schema=tuple(schema_from_dict(d) for d in doc["schema"]),
        classes=tuple(doc["classes"]),
        version=doc["version"],
        source_fingerprint=doc["source_fingerprint"],
    )


def _digest(doc: Mapping) -> str:
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def dumps_tree(tree: DecisionTree) -> str:
    doc = tree_to_doc(tree)
    doc["digest"] = _digest({k: v for k, v in doc.items() if k != "digest"})
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def loads_tree(text: str) -> DecisionTree:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorruptDocumentError(f"tree document is not valid JSON: {exc}") from exc
    stored = doc.pop("digest", None)
    if stored != _digest(doc):
        raise CorruptDocumentError("tree document digest mismatch")
    return tree_from_doc(doc)


# ---------------------------------------------------------------------------
# turn / transcript records
# ---------------------------------------------------------------------------

def turn_to_record(turn: Turn) -> dict:
    record: dict = {"kind": "turn", "index": turn.index, "role": turn.role, "turn": turn.kind}
    if turn.attribute is not None:
        record["attribute"] = turn.attribute
    if turn.text is not None:
        record["text"] = turn.text
    if turn.value is not None:
        record["value"] = value_to_json(turn.value)
    if turn.confidence is not None:
        record["confidence"] = turn.confidence
    if turn.volunteered:
        record["volunteered"] = {k: value_to_json(v) for k, v in sorted(turn.volunteered.items())}
    record["at"] = turn.at
    return record


def turn_from_record(record: Mapping) -> Turn:
    volunteered = record.get("volunteered")
    return Turn(
        index=record["index"],
        role=record["role"],
        kind=record["turn"],
        attribute=record.get("attribute"),
        text=record.get("text"),
        value=value_from_json(record["value"]) if "value" in record else None,
        confidence=record.get("confidence"),
        volunteered={k: value_from_json(v) for k, v in volunteered.items()} if volunteered else None,
        at=record.get("at", ""),
    )


def _dump_line(record: Mapping) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":")) + "\n"


def session_to_log(session: DialogSession) -> str:
    """The pinned session log document: header line + one line per turn."""
    observed = observed_values(session)
    header = {
        "kind": "session",
        "id": session.id,
        "tree_version": session.tree_version,
        "mode": session.mode,
        "status": session.status,
        "result": list(session.result) if session.result else None,
        "novel": session.novel,
        "questions": session.system_question_count(),
        "observed": {k: value_to_json(v) for k, v in sorted(observed.items())},
    }
    lines = [_dump_line(header)]
    lines.extend(_dump_line(turn_to_record(t)) for t in session.transcript)
    return "".join(lines)


# ---------------------------------------------------------------------------
# verification records
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class VerificationRecord:
    """A supervisor's relabeling of one completed dialog."""

    session_id: str
    operator_id: str
    original_label: str
    corrected_label: str
    applied_in_version: Optional[int] = None
    created_at: str = ""

    def to_record(self) -> dict:
        return {
            "session_id": self.session_id,
            "operator_id": self.operator_id,
            "original_label": self.original_label,
            "corrected_label": self.corrected_label,
            "applied_in_version": self.applied_in_version,
            "created_at": self.created_at,
        }

    @classmethod
    def from_record(cls, record: Mapping) -> "VerificationRecord":
        return cls(
            session_id=record["session_id"],
            operator_id=record["operator_id"],
            original_label=record["original_label"],
            corrected_label=record["corrected_label"],
            applied_in_version=record.get("applied_in_version"),
            created_at=record.get("created_at", ""),
        )


# ---------------------------------------------------------------------------
# schema config documents
# ---------------------------------------------------------------------------

def schema_config_to_json(config: SchemaConfig) -> str:
    doc = {
        "label_column": config.label_column,
        "classes": list(config.classes),
        "attributes": [schema_to_dict(a) for a in config.attributes],
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def schema_config_from_json(text: str) -> SchemaConfig:
    doc = json.loads(text)
    return SchemaConfig(
        attributes=tuple(schema_from_dict(d) for d in doc["attributes"]),
        label_column=doc.get("label_column", "label"),
        classes=tuple(doc.get("classes", ())),
    )


def dataset_to_csv(dataset: Dataset, label_column: str = "label") -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow([a.name for a in dataset.schema] + [label_column])
    for example in dataset.examples:
        row = []
        for attr in dataset.schema:
            value = example.values[attr.name]
            if is_missing(value):
                row.append(MISSING_TOKEN)
            elif isinstance(value, float):
                row.append(repr(value))
            else:
                row.append(value)
        row.append(example.label)
        writer.writerow(row)
    return out.getvalue()


# ---------------------------------------------------------------------------
# the store
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SessionSummary:
    id: str
    tree_version: int
    mode: str
    status: str
    result: Optional[tuple[str, float]]
    novel: bool
    questions: int


class Store:
    """Single-writer file store rooted at one directory.

    Writers use write-then-rename for whole documents, so concurrent readers
    only ever see fully committed content.
    """

    def __init__(self, root: Union[str, Path], clock: Callable[[], str] = utc_now):
        self.root = Path(root)
        self.clock = clock
        for sub in ("trees", "sessions", "datasets"):
            (self.root / sub).mkdir(parents=True, exist_ok=True)

    # -- paths ---------------------------------------------------------

    def _tree_path(self, version: int) -> Path:
        return self.root / "trees" / f"v{version}.tree"

    def _session_path(self, session_id: str) -> Path:
        return self.root / "sessions" / f"{session_id}.log"

    @property
    def _verifications_path(self) -> Path:
        return self.root / "verifications.log"

    @property
    def _satisfaction_path(self) -> Path:
        return self.root / "satisfaction.log"

    def _write_atomic(self, path: Path, text: str) -> None:
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text(text, encoding="utf-8")
        tmp.replace(path)

    # -- trees ----------------------------------------------------------

    def save_tree(self, tree: DecisionTree) -> Path:
        path = self._tree_path(tree.version)
        self._write_atomic(path, dumps_tree(tree))
        return path

    def load_tree(self, version: int) -> DecisionTree:
        path = self._tree_path(version)
        if not path.exists():
            raise NotFoundError(f"no stored tree with version {version}")
        return loads_tree(path.read_text(encoding="utf-8"))

    def tree_versions(self) -> list[int]:
        versions = []
        for path in (self.root / "trees").glob("v*.tree"):
            try:
                versions.append(int(path.stem[1:]))
            except ValueError:
                continue
        return sorted(versions)

    def latest_tree_version(self) -> Optional[int]:
        versions = self.tree_versions()
        return versions[-1] if versions else None

    # -- datasets ---------------------------------------------------------

    def save_dataset(self, name: str, dataset: Dataset, label_column: str = "label") -> Path:
        config = SchemaConfig(
            attributes=dataset.schema, label_column=label_column, classes=dataset.classes
        )
        self._write_atomic(
            self.root / "datasets" / f"{name}.schema.json", schema_config_to_json(config)
        )
        path = self.root / "datasets" / f"{name}.csv"
        self._write_atomic(path, dataset_to_csv(dataset, label_column))
        return path

    def load_dataset(self, name: str) -> Dataset:
        csv_path = self.root / "datasets" / f"{name}.csv"
        schema_path = self.root / "datasets" / f"{name}.schema.json"
        if not csv_path.exists() or not schema_path.exists():
            raise NotFoundError(f"no stored dataset named {name!r}")
        config = schema_config_from_json(schema_path.read_text(encoding="utf-8"))
        return load_dataset(csv_path.read_text(encoding="utf-8"), config)

    # -- session logs ---------------------------------------------------

    def append_session_log(self, session: DialogSession) -> Path:
        path = self._session_path(session.id)
        if path.exists():
            raise DialogTreeError(f"session {session.id} is already logged (logs are append-only)")
        self._write_atomic(path, session_to_log(session))
        return path

    def has_session(self, session_id: str) -> bool:
        return self._session_path(session_id).exists()

    def load_session(self, session_id: str) -> tuple[dict, list[Turn]]:
        path = self._session_path(session_id)
        if not path.exists():
            raise NotFoundError(f"no logged session {session_id!r}")
        lines = path.read_text(encoding="utf-8").splitlines()
        header = json.loads(lines[0])
        turns = [turn_from_record(json.loads(line)) for line in lines[1:] if line]
        return header, turns

    def session_observed_values(self, session_id: str) -> dict:
        header, _ = self.load_session(session_id)
        return {k: value_from_json(v) for k, v in header.get("observed", {}).items()}

    def list_sessions(
        self,
        status: Optional[str] = None,
        novel: Optional[bool] = None,
        version: Optional[int] = None,
    ) -> list[SessionSummary]:
        summaries = []
        for path in sorted((self.root / "sessions").glob("*.log")):
            header = json.loads(path.read_text(encoding="utf-8").splitlines()[0])
            summary = SessionSummary(
                id=header["id"],
                tree_version=header["tree_version"],
                mode=header["mode"],
                status=header["status"],
                result=tuple(header["result"]) if header.get("result") else None,
                novel=header.get("novel", False),
                questions=header.get("questions", 0),
            )
            if status is not None and summary.status != status:
                continue
            if novel is not None and summary.novel != novel:
                continue
            if version is not None and summary.tree_version != version:
                continue
            summaries.append(summary)
        return summaries

    # -- verifications ----------------------------------------------------

    def _read_verifications(self) -> list[VerificationRecord]:
        path = self._verifications_path
        if not path.exists():
            return []
        records = []
        for line in path.read_text(encoding="utf-8").splitlines():
            if line:
                records.append(VerificationRecord.from_record(json.loads(line)))
        return records

    def record_verification(
        self, session_id: str, operator_id: str, corrected_label: str
    ) -> VerificationRecord:
        header, _ = self.load_session(session_id)  # NotFoundError for unknown sessions
        if header["status"] != "classified" or not header.get("result"):
            raise VerificationError(f"session {session_id!r} is not classified yet")
        classes = self.load_tree(header["tree_version"]).classes
        if corrected_label not in classes:
            raise VerificationError(
                f"label {corrected_label!r} is not one of the classes {list(classes)}"
            )
        record = VerificationRecord(
            session_id=session_id,
            operator_id=operator_id,
            original_label=header["result"][0],
            corrected_label=corrected_label,
            applied_in_version=None,
            created_at=self.clock(),
        )
        with open(self._verifications_path, "a", encoding="utf-8") as fh:
            fh.write(_dump_line(record.to_record()))
        return record

    def verifications(self) -> list[VerificationRecord]:
        return self._read_verifications()

    def pending_verifications(self) -> list[VerificationRecord]:
        return [r for r in self._read_verifications() if r.applied_in_version is None]

    def mark_verifications_applied(self, version: int) -> int:
        """Stamp every pending record with `version`, atomically; returns the count."""
        records = self._read_verifications()
        applied = 0
        stamped = []
        for record in records:
            if record.applied_in_version is None:
                record = VerificationRecord(
                    session_id=record.session_id,
                    operator_id=record.operator_id,
                    original_label=record.original_label,
                    corrected_label=record.corrected_label,
                    applied_in_version=version,
                    created_at=record.created_at,
                )
                applied += 1
            stamped.append(record)
        text = "".join(_dump_line(r.to_record()) for r in stamped)
        self._write_atomic(self._verifications_path, text)
        return applied

    # -- satisfaction -----------------------------------------------------

    def record_satisfaction(self, session_id: str, score: int) -> dict:
        if not isinstance(score, int) or isinstance(score, bool) or not 1 <= score <= 5:
            raise ValueError(f"satisfaction score must be an integer in 1..5, got {score!r}")
        header, _ = self.load_session(session_id)
        if header["status"] != "classified":
            raise VerificationError(f"session {session_id!r} is not classified yet")
        record = {"session_id": session_id, "score": score, "at": self.clock()}
        with open(self._satisfaction_path, "a", encoding="utf-8") as fh:
            fh.write(_dump_line(record))
        return record

    def satisfaction_scores(self) -> dict[str, int]:
        """Latest score per session."""
        path = self._satisfaction_path
        scores: dict[str, int] = {}
        if path.exists():
            for line in path.read_text(encoding="utf-8").splitlines():
                if line:
                    record = json.loads(line)
                    scores[record["session_id"]] = record["score"]
        return scores

    def satisfaction_mean(self) -> Optional[float]:
        scores = self.satisfaction_scores()
        if not scores:
            return None
        return sum(scores.values()) / len(scores)
