"""Dual-path retrieval: base activation, one-hop spreading, and rank fusion."""

from __future__ import annotations

import math
from datetime import datetime
from typing import Iterable, Mapping

import numpy as np

from .config import EngineConfig
from .encoding import extract_keywords
from .graph import EpisodicGraph, effective_weight, reinforce
from .prompts import chronological, format_turn
from .types import MemoryNode, RankedNode, RetrievalResult, SemanticHit, SemanticRecord, unit_normalize

BASE = "base"
FLIP = "flip"


def cosine_similarity(a: np.ndarray, b: np.ndarray) -> float:
    """Dot product of two unit vectors."""
    if np.shape(a) != np.shape(b):
        raise ValueError(f"dimension mismatch: {np.shape(a)} vs {np.shape(b)}")
    return float(np.dot(a, b))


def keyword_match(query_keywords: Iterable[str], node_keywords: Iterable[str]) -> float:
    q = set(query_keywords)
    if not q:
        return 0.0
    return len(q & set(node_keywords)) / len(q)


def temporal_decay(elapsed_days: float, tau_days: float) -> float:
    return math.exp(-max(0.0, elapsed_days) / tau_days)


def elapsed_days(now: datetime, then: datetime) -> float:
    return max(0.0, (now - then).total_seconds() / 86400.0)


def base_score(
    query_embedding: np.ndarray,
    query_keywords: Iterable[str],
    query_time: datetime,
    node: MemoryNode,
    config: EngineConfig,
) -> float:
    """``(cosine + alpha * keyword_match) * exp(-dt / tau)``.

    Negative similarities are kept; a node dated after the query gets ``dt = 0``.
    """
    sim = cosine_similarity(query_embedding, node.embedding)
    bonus = config.alpha_keyword * keyword_match(query_keywords, node.keywords)
    return (sim + bonus) * temporal_decay(elapsed_days(query_time, node.timestamp), config.tau_days)


def base_scores(
    query_embedding: np.ndarray,
    query_keywords: Iterable[str],
    query_time: datetime,
    graph: EpisodicGraph,
    config: EngineConfig,
) -> dict[int, float]:
    qk = frozenset(query_keywords)
    return {i: base_score(query_embedding, qk, query_time, n, config) for i, n in graph.nodes.items()}


def spread(
    base: Mapping[int, float],
    graph: EpisodicGraph,
    current_step: int,
    config: EngineConfig,
) -> dict[int, float]:
    """One hop of activation from sources at or above ``theta_spread``.

    ``S(j) = S_base(j) + beta * sum_{i in N(j), S_base(i) >= theta} S_base(i) * w_ij``
    """
    out = dict(base)
    if config.beta == 0:
        return out
    sources = {i for i, s in base.items() if s >= config.theta_spread}
    for j in sorted(base):
        # summed in neighbor-id order so the result does not depend on edge insertion order
        incoming = 0.0
        for i in sorted(graph.adjacency[j] & sources):
            incoming += base[i] * effective_weight(graph.edge(i, j), current_step, config)
        if incoming:
            out[j] = base[j] + config.beta * incoming
    return out


def dual_path_rank(
    base: Mapping[int, float],
    augmented: Mapping[int, float],
    config: EngineConfig,
) -> list[RankedNode]:
    """Top-k by base score, then up to ``m_flip`` extra nodes by augmented score.

    Only nodes whose score was actually raised by spreading are eligible for
    the flip path, so with spreading off (or ``beta == 0``) the result is the
    plain base top-k.  Ties break toward the lower node id.
    """
    by_base = sorted(base, key=lambda i: (-base[i], i))
    top = by_base[: config.k_episodic]
    chosen = set(top)
    candidates = [i for i in augmented if i not in chosen and augmented[i] > base[i]]
    flips = sorted(candidates, key=lambda i: (-augmented[i], i))[: config.m_flip]
    ranked = [RankedNode(i, base[i], augmented[i], BASE) for i in top]
    ranked += [RankedNode(i, base[i], augmented[i], FLIP) for i in flips]
    return ranked


def retrieve_semantic(
    records: Iterable[SemanticRecord], query_embedding: np.ndarray, config: EngineConfig
) -> list[SemanticHit]:
    hits = [SemanticHit(r.id, cosine_similarity(query_embedding, r.embedding)) for r in records]
    hits.sort(key=lambda h: (-h.similarity, h.record_id))
    return hits[: config.k_semantic]


def assemble_context(nodes: Iterable[MemoryNode], records: Iterable[SemanticRecord]) -> str:
    lines = [format_turn(n) for n in chronological(nodes)]
    lines += [f"- {r.statement}" for r in records]
    return "\n".join(lines)


def retrieve(engine, query_text: str, now: datetime) -> RetrievalResult:
    """Full retrieval pipeline with write-on-read reinforcement.

    The embedding call happens before any state changes, so a backend
    failure leaves the engine exactly as it was.
    """
    if not query_text or not query_text.strip():
        raise ValueError("query must be a non-empty string")
    config: EngineConfig = engine.config
    graph: EpisodicGraph = engine.graph
    q = unit_normalize(engine.embedder.embed_text(query_text), engine.dim)
    engine.dim = q.shape[0]
    q_keywords = extract_keywords(query_text, config.keyword_cap)

    semantic = retrieve_semantic(engine.semantic.values(), q, config)
    if not graph.nodes:
        episodic: list[RankedNode] = []
    else:
        saved_step = graph.step
        graph.step += 1
        try:
            base = base_scores(q, q_keywords, now, graph, config)
            augmented = spread(base, graph, graph.step, config) if config.enable_spreading else dict(base)
            episodic = dual_path_rank(base, augmented, config)
        except Exception:
            graph.step = saved_step
            raise
        retrieved = [r.node_id for r in episodic]
        reinforce(graph, retrieved, config)
        for i in retrieved:
            node = graph.nodes[i]
            node.last_access_time = max(now, node.timestamp)
            node.access_count += 1

    context = assemble_context(
        (graph.nodes[r.node_id] for r in episodic), (engine.semantic[h.record_id] for h in semantic)
    )
    return RetrievalResult(
        episodic=episodic,
        semantic=semantic,
        context_token_count=engine.count_tokens(context),
        query_text=query_text,
        query_embedding=q,
    )
