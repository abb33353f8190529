"""Domain types shared by every part of the engine."""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from typing import NamedTuple

import numpy as np

UNIT_NORM_TOL = 1e-6


class EmbeddingError(ValueError):
    """An embedding has the wrong shape or cannot be normalised."""


def unit_normalize(vector, dim: int | None = None) -> np.ndarray:
    """Return ``vector`` as a float64 unit vector.

    Raises :class:`EmbeddingError` on zero, non-finite or wrong-dimension input.
    """
    arr = np.asarray(vector, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise EmbeddingError(f"embedding must be a non-empty 1-d vector, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise EmbeddingError(f"embedding dimension {arr.shape[0]} does not match engine dimension {dim}")
    if not np.all(np.isfinite(arr)):
        raise EmbeddingError("embedding contains non-finite values")
    norm = float(np.linalg.norm(arr))
    if norm == 0.0:
        raise EmbeddingError("zero-vector embedding cannot be normalised")
    return arr / norm


def is_unit(vector: np.ndarray, tol: float = UNIT_NORM_TOL) -> bool:
    return abs(float(np.linalg.norm(vector)) - 1.0) <= tol


@dataclass
class MemoryNode:
    """One conversation turn stored in the episodic graph."""

    id: int
    text: str
    embedding: np.ndarray
    timestamp: datetime
    keywords: frozenset[str]
    speaker: str
    last_access_time: datetime | None = None
    access_count: int = 0
    created_step: int = 0
    session_id: str | None = None

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MemoryNode):
            return NotImplemented
        return (
            self.id == other.id
            and self.text == other.text
            and np.array_equal(self.embedding, other.embedding)
            and self.timestamp == other.timestamp
            and self.keywords == other.keywords
            and self.speaker == other.speaker
            and self.last_access_time == other.last_access_time
            and self.access_count == other.access_count
            and self.created_step == other.created_step
            and self.session_id == other.session_id
        )

    @property
    def last_active(self) -> datetime:
        if self.last_access_time is None:
            return self.timestamp
        return max(self.timestamp, self.last_access_time)


def edge_key(i: int, j: int) -> tuple[int, int]:
    if i == j:
        raise ValueError(f"self-loop on node {i} is not allowed")
    return (i, j) if i < j else (j, i)


@dataclass
class HebbianEdge:
    """Undirected association between two nodes.

    ``weight`` is the value as of ``last_update_step``; decay since then is
    applied on read.
    """

    a: int
    b: int
    weight: float
    last_update_step: int
    co_activation_count: int = 0

    @property
    def key(self) -> tuple[int, int]:
        return (self.a, self.b)

    def other(self, node_id: int) -> int:
        return self.b if node_id == self.a else self.a


class Category(str, Enum):
    USER_MODEL = "user_model"
    FACTUAL = "factual"
    AGENT_KNOWLEDGE = "agent_knowledge"


@dataclass
class SemanticRecord:
    """A distilled declarative statement with links back to its source turns."""

    id: int
    category: Category
    statement: str
    confidence: float
    evidence: list[int]
    embedding: np.ndarray
    created_at: datetime
    source_hub: int
    stale_evidence: list[int] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.category = Category(self.category)
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0,1]")
        if not self.evidence:
            raise ValueError("semantic record needs at least one evidence id")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SemanticRecord):
            return NotImplemented
        return (
            self.id == other.id
            and self.category == other.category
            and self.statement == other.statement
            and self.confidence == other.confidence
            and self.evidence == other.evidence
            and np.array_equal(self.embedding, other.embedding)
            and self.created_at == other.created_at
            and self.source_hub == other.source_hub
            and self.stale_evidence == other.stale_evidence
        )


@dataclass
class ConsolidationEvent:
    hub_id: int
    cluster: list[int]
    record_ids: list[int]
    step: int
    time: datetime


class RankedNode(NamedTuple):
    node_id: int
    base_score: float
    augmented_score: float
    path: str  # "base" or "flip"


class SemanticHit(NamedTuple):
    record_id: int
    similarity: float


@dataclass
class RetrievalResult:
    episodic: list[RankedNode]
    semantic: list[SemanticHit]
    context_token_count: int
    query_text: str
    query_embedding: np.ndarray

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RetrievalResult):
            return NotImplemented
        return (
            (self.episodic, self.semantic, self.context_token_count, self.query_text)
            == (other.episodic, other.semantic, other.context_token_count, other.query_text)
            and np.array_equal(self.query_embedding, other.query_embedding)
        )

    @property
    def node_ids(self) -> list[int]:
        return [r.node_id for r in self.episodic]

    @property
    def flip_ids(self) -> list[int]:
        return [r.node_id for r in self.episodic if r.path == "flip"]


@dataclass
class ConversationTurn:
    session_id: str
    turn_id: str
    speaker: str
    text: str
    timestamp: datetime


class QACategory(str, Enum):
    SINGLE_HOP = "single_hop"
    MULTI_HOP = "multi_hop"
    TEMPORAL = "temporal"
    OPEN_DOMAIN = "open_domain"
    ADVERSARIAL = "adversarial"


@dataclass
class QAItem:
    question: str
    answer: str
    category: QACategory
    evidence: list[str] = field(default_factory=list)
