"""The memory engine: one episodic graph, one semantic store, and their lifecycle."""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from typing import Callable, Iterable

from . import consolidation, retrieval
from .config import EngineConfig
from .encoding import ingest_turn
from .graph import EpisodicGraph, associative_strength
from .prompts import render_response
from .types import Category, ConsolidationEvent, ConversationTurn, RetrievalResult, SemanticRecord


def count_tokens(text: str) -> int:
    """Whitespace token count, the default context-size measure."""
    return len(text.split())


@dataclass
class Answer:
    text: str
    context_tokens: int
    retrieval: RetrievalResult
    prompt: str


class MemoryEngine:
    """Associative long-term memory for a single agent.

    Not thread-safe: callers serialise ingest, retrieval and lifecycle
    passes on one instance.
    """

    def __init__(
        self,
        config: EngineConfig | None = None,
        embedder=None,
        chat=None,
        *,
        token_counter: Callable[[str], int] = count_tokens,
    ):
        self.config = (config or EngineConfig()).validated()
        self.embedder = embedder
        self.chat = chat
        self.count_tokens = token_counter
        self.graph = EpisodicGraph()
        self.semantic: dict[int, SemanticRecord] = {}
        self.events: list[ConsolidationEvent] = []
        self.hub_cooldowns: dict[int, int] = {}
        self.next_record_id = 0
        self.dim: int | None = self.config.embedding_dim

    def __repr__(self) -> str:
        return (
            f"MemoryEngine(nodes={len(self.graph.nodes)}, edges={len(self.graph.edges)}, "
            f"records={len(self.semantic)}, step={self.graph.step})"
        )

    # ---- encoding -------------------------------------------------------

    def ingest(self, turn: ConversationTurn) -> int:
        node_id = ingest_turn(self.graph, turn, self.embedder, self.config, self.dim)
        self.dim = self.graph.nodes[node_id].embedding.shape[0]
        return node_id

    def ingest_many(self, turns: Iterable[ConversationTurn]) -> list[int]:
        return [self.ingest(t) for t in turns]

    # ---- retrieval ------------------------------------------------------

    def retrieve(self, query: str, now: datetime) -> RetrievalResult:
        """Retrieve with write-on-read reinforcement; no lifecycle passes."""
        return retrieval.retrieve(self, query, now)

    def recall(self, query: str, now: datetime) -> RetrievalResult:
        """Retrieve, then run reflection and forgetting as scheduled after every retrieval event."""
        result = self.retrieve(query, now)
        self.run_reflection(now)
        self.run_forgetting(now)
        return result

    def answer(self, question: str, now: datetime, chat=None) -> Answer:
        chat = chat or self.chat
        if chat is None:
            raise RuntimeError("answering needs a chat backend")
        result = self.recall(question, now)
        # forgetting may have just removed a retrieved node
        episodic = [self.graph.nodes[i] for i in result.node_ids if i in self.graph.nodes]
        records = [self.semantic[h.record_id] for h in result.semantic]
        knowledge = [r for r in records if r.category is not Category.USER_MODEL]
        user_model = [r for r in records if r.category is Category.USER_MODEL]
        system, user = render_response(episodic, knowledge, user_model, question)
        text = chat.chat(system, user)
        return Answer(text=text, context_tokens=self.count_tokens(user), retrieval=result, prompt=user)

    # ---- lifecycle ------------------------------------------------------

    def run_reflection(self, now: datetime) -> list[ConsolidationEvent]:
        return consolidation.run_reflection(self, now)

    def run_forgetting(self, now: datetime) -> list[int]:
        return consolidation.run_forgetting(self, now)

    def strength(self, node_id: int) -> float:
        return associative_strength(self.graph, node_id, self.graph.step, self.config)

    def latest_time(self) -> datetime | None:
        if not self.graph.nodes:
            return None
        return max(n.timestamp for n in self.graph.nodes.values())

    def state_equals(self, other: "MemoryEngine") -> bool:
        g, h = self.graph, other.graph
        return (
            self.config == other.config
            and g.nodes == h.nodes
            and g.edges == h.edges
            and g.adjacency == h.adjacency
            and (g.step, g.last_node_id, g.last_session_id, g.next_node_id)
            == (h.step, h.last_node_id, h.last_session_id, h.next_node_id)
            and self.semantic == other.semantic
            and self.events == other.events
            and self.hub_cooldowns == other.hub_cooldowns
            and self.next_record_id == other.next_record_id
            and self.dim == other.dim
        )
