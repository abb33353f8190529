"""Single-file JSON snapshots of a whole engine."""

from __future__ import annotations

import json
import os
import tempfile
from datetime import datetime
from pathlib import Path
from typing import Any

import numpy as np

from .config import ConfigError, EngineConfig
from .engine import MemoryEngine
from .graph import EpisodicGraph
from .types import (
    UNIT_NORM_TOL,
    Category,
    ConsolidationEvent,
    HebbianEdge,
    MemoryNode,
    SemanticRecord,
    is_unit,
)

FORMAT_VERSION = "hela-mem/1"


class SnapshotError(ValueError):
    """A snapshot could not be written, parsed or validated."""


# ---- encoding ---------------------------------------------------------------


def _time(ts: datetime | None) -> str | None:
    return None if ts is None else ts.isoformat()


def _vec(v: np.ndarray) -> list[float]:
    return [float(x) for x in v]


def engine_to_document(engine: MemoryEngine) -> dict[str, Any]:
    g = engine.graph
    return {
        "format": FORMAT_VERSION,
        "config": engine.config.to_dict(),
        "dim": engine.dim,
        "step": g.step,
        "last_node_id": g.last_node_id,
        "last_session_id": g.last_session_id,
        "next_node_id": g.next_node_id,
        "next_record_id": engine.next_record_id,
        "nodes": [
            {
                "id": n.id,
                "text": n.text,
                "speaker": n.speaker,
                "timestamp": _time(n.timestamp),
                "session_id": n.session_id,
                "keywords": sorted(n.keywords),
                "last_access_time": _time(n.last_access_time),
                "access_count": n.access_count,
                "created_step": n.created_step,
                "embedding": _vec(n.embedding),
            }
            for n in sorted(g.nodes.values(), key=lambda n: n.id)
        ],
        "edges": [
            {
                "a": e.a,
                "b": e.b,
                "weight": e.weight,
                "last_update_step": e.last_update_step,
                "co_activation_count": e.co_activation_count,
            }
            for _, e in sorted(g.edges.items())
        ],
        "adjacency": {str(i): sorted(nbrs) for i, nbrs in sorted(g.adjacency.items())},
        "semantic": [
            {
                "id": r.id,
                "category": r.category.value,
                "statement": r.statement,
                "confidence": r.confidence,
                "evidence": list(r.evidence),
                "stale_evidence": list(r.stale_evidence),
                "created_at": _time(r.created_at),
                "source_hub": r.source_hub,
                "embedding": _vec(r.embedding),
            }
            for r in sorted(engine.semantic.values(), key=lambda r: r.id)
        ],
        "events": [
            {
                "hub_id": ev.hub_id,
                "cluster": list(ev.cluster),
                "record_ids": list(ev.record_ids),
                "step": ev.step,
                "time": _time(ev.time),
            }
            for ev in engine.events
        ],
        "hub_cooldowns": {str(k): v for k, v in sorted(engine.hub_cooldowns.items())},
    }


def dumps(doc: dict[str, Any]) -> str:
    """JSON with one list item per line: diffable without exploding embeddings."""
    parts = []
    for key, value in doc.items():
        if isinstance(value, list) and value:
            items = ",\n".join("    " + json.dumps(item, ensure_ascii=False) for item in value)
            body = "[\n" + items + "\n  ]"
        else:
            body = json.dumps(value, ensure_ascii=False)
        parts.append(f"  {json.dumps(key)}: {body}")
    return "{\n" + ",\n".join(parts) + "\n}\n"


def save_snapshot(engine: MemoryEngine, path: str | os.PathLike) -> None:
    """Write ``engine`` to ``path`` atomically (temp file in the same directory, then rename)."""
    path = Path(path)
    text = dumps(engine_to_document(engine))
    directory = path.parent if str(path.parent) else Path(".")
    try:
        fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=directory)
    except OSError as exc:
        raise SnapshotError(f"cannot write snapshot {path}: {exc}") from exc
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException as exc:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        if isinstance(exc, OSError):
            raise SnapshotError(f"cannot write snapshot {path}: {exc}") from exc
        raise


# ---- decoding ---------------------------------------------------------------


class _Reader:
    """Field access that reports the JSON path of whatever is missing or malformed."""

    def __init__(self, data: Any, where: str):
        self.data = data
        self.where = where

    def get(self, key: str, kind: type | tuple[type, ...] | None = None, optional: bool = False) -> Any:
        if not isinstance(self.data, dict):
            raise SnapshotError(f"{self.where}: expected an object")
        if key not in self.data:
            if optional:
                return None
            raise SnapshotError(f"{self.where}.{key}: missing field")
        value = self.data[key]
        if value is None and optional:
            return None
        if kind is not None and (not isinstance(value, kind) or (isinstance(value, bool) and bool not in _as_tuple(kind))):
            raise SnapshotError(f"{self.where}.{key}: expected {_kind_name(kind)}, got {type(value).__name__}")
        return value

    def time(self, key: str, optional: bool = False) -> datetime | None:
        raw = self.get(key, str, optional=optional)
        if raw is None:
            return None
        try:
            return datetime.fromisoformat(raw)
        except ValueError as exc:
            raise SnapshotError(f"{self.where}.{key}: bad timestamp {raw!r}") from exc

    def vector(self, key: str, dim: int | None) -> np.ndarray:
        raw = self.get(key, list)
        if not raw or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in raw):
            raise SnapshotError(f"{self.where}.{key}: expected a non-empty list of numbers")
        vec = np.asarray(raw, dtype=np.float64)
        if dim is not None and vec.shape[0] != dim:
            raise SnapshotError(f"{self.where}.{key}: dimension {vec.shape[0]} does not match {dim}")
        if not is_unit(vec, UNIT_NORM_TOL):
            raise SnapshotError(f"{self.where}.{key}: embedding is not unit norm (|v| = {np.linalg.norm(vec):.9f})")
        return vec

    def items(self, key: str) -> list["_Reader"]:
        return [_Reader(x, f"{self.where}.{key}[{i}]") for i, x in enumerate(self.get(key, list))]


def _as_tuple(kind):
    return kind if isinstance(kind, tuple) else (kind,)


def _kind_name(kind) -> str:
    return "/".join(k.__name__ for k in _as_tuple(kind))


def document_to_engine(doc: Any, *, embedder=None, chat=None, **engine_kw) -> MemoryEngine:
    root = _Reader(doc, "$")
    version = root.get("format", str)
    if version != FORMAT_VERSION:
        raise SnapshotError(f"unsupported snapshot version {version!r} (expected {FORMAT_VERSION!r})")
    try:
        config = EngineConfig.from_dict(root.get("config", dict)).validated()
    except (ConfigError, TypeError) as exc:
        raise SnapshotError(f"$.config: {exc}") from exc
    dim = root.get("dim", int, optional=True)

    engine = MemoryEngine(config, embedder, chat, **engine_kw)
    engine.dim = dim
    g = EpisodicGraph()
    g.step = root.get("step", int)
    g.last_node_id = root.get("last_node_id", int, optional=True)
    g.last_session_id = root.get("last_session_id", str, optional=True)

    for r in root.items("nodes"):
        node = MemoryNode(
            id=r.get("id", int),
            text=r.get("text", str),
            embedding=r.vector("embedding", dim),
            timestamp=r.time("timestamp"),
            keywords=frozenset(r.get("keywords", list)),
            speaker=r.get("speaker", str),
            last_access_time=r.time("last_access_time", optional=True),
            access_count=r.get("access_count", int),
            created_step=r.get("created_step", int),
            session_id=r.get("session_id", str, optional=True),
        )
        if node.id in g.nodes:
            raise SnapshotError(f"{r.where}.id: duplicate node id {node.id}")
        if node.access_count < 0:
            raise SnapshotError(f"{r.where}.access_count: negative")
        g.nodes[node.id] = node

    for r in root.items("edges"):
        e = HebbianEdge(
            a=r.get("a", int),
            b=r.get("b", int),
            weight=float(r.get("weight", (int, float))),
            last_update_step=r.get("last_update_step", int),
            co_activation_count=r.get("co_activation_count", int),
        )
        if e.a >= e.b:
            raise SnapshotError(f"{r.where}: endpoints must satisfy a < b, got ({e.a}, {e.b})")
        if e.a not in g.nodes or e.b not in g.nodes:
            raise SnapshotError(f"{r.where}: edge references unknown node")
        if e.key in g.edges:
            raise SnapshotError(f"{r.where}: duplicate edge {e.key}")
        g.edges[e.key] = e

    adjacency = root.get("adjacency", dict)
    for key, nbrs in adjacency.items():
        if not key.lstrip("-").isdigit() or not isinstance(nbrs, list) or not all(isinstance(x, int) for x in nbrs):
            raise SnapshotError(f"$.adjacency.{key}: expected a list of node ids")
        g.adjacency[int(key)] = set(nbrs)

    g.next_node_id = root.get("next_node_id", int)
    if g.nodes and g.next_node_id <= max(g.nodes):
        raise SnapshotError("$.next_node_id: must exceed every node id")
    problems = g.check_invariants()
    if problems:
        raise SnapshotError("invalid graph in snapshot: " + "; ".join(problems[:5]))
    engine.graph = g

    for r in root.items("semantic"):
        try:
            rec = SemanticRecord(
                id=r.get("id", int),
                category=Category(r.get("category", str)),
                statement=r.get("statement", str),
                confidence=float(r.get("confidence", (int, float))),
                evidence=list(r.get("evidence", list)),
                embedding=r.vector("embedding", dim),
                created_at=r.time("created_at"),
                source_hub=r.get("source_hub", int),
                stale_evidence=list(r.get("stale_evidence", list)),
            )
        except ValueError as exc:
            if isinstance(exc, SnapshotError):
                raise
            raise SnapshotError(f"{r.where}: {exc}") from exc
        engine.semantic[rec.id] = rec
    engine.next_record_id = root.get("next_record_id", int)

    for r in root.items("events"):
        engine.events.append(
            ConsolidationEvent(
                hub_id=r.get("hub_id", int),
                cluster=list(r.get("cluster", list)),
                record_ids=list(r.get("record_ids", list)),
                step=r.get("step", int),
                time=r.time("time"),
            )
        )
    engine.hub_cooldowns = {int(k): v for k, v in root.get("hub_cooldowns", dict).items()}
    return engine


def load_snapshot(path: str | os.PathLike, *, embedder=None, chat=None, **engine_kw) -> MemoryEngine:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SnapshotError(f"cannot read snapshot {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SnapshotError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    try:
        return document_to_engine(doc, embedder=embedder, chat=chat, **engine_kw)
    except SnapshotError as exc:
        raise SnapshotError(f"{path}: {exc}") from exc


# ---- event log --------------------------------------------------------------


class EventLog:
    """Append-only JSON-lines journal of lifecycle events.

    Each entry is one line ``{"kind": ..., "step": ..., ...}``.  Lines are
    only ever appended, and each append is flushed and fsynced before
    returning, so a crash can at worst truncate the final line.
    """

    def __init__(self, path: str | os.PathLike):
        self.path = Path(path)

    @classmethod
    def beside(cls, snapshot: str | os.PathLike) -> "EventLog":
        snapshot = Path(snapshot)
        return cls(snapshot.with_name(snapshot.name + ".events.jsonl"))

    def append(self, kind: str, **payload: Any) -> None:
        entry = json.dumps({"kind": kind, **payload}, ensure_ascii=False, sort_keys=True, default=_time)
        try:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(entry + "\n")
                fh.flush()
                os.fsync(fh.fileno())
        except OSError as exc:
            raise SnapshotError(f"cannot append to event log {self.path}: {exc}") from exc

    def read(self) -> list[dict[str, Any]]:
        """All complete entries; a torn final line is ignored."""
        if not self.path.exists():
            return []
        entries = []
        lines = self.path.read_text(encoding="utf-8").split("\n")
        for lineno, line in enumerate(lines, 1):
            if not line.strip():
                continue
            try:
                entries.append(json.loads(line))
            except json.JSONDecodeError as exc:
                if lineno == len(lines):
                    break
                raise SnapshotError(f"{self.path}:{lineno}: corrupt event log entry") from exc
        return entries
