"""Hub-triggered distillation into semantic records, and the forgetting sweep."""

from __future__ import annotations

import logging
import re
from datetime import datetime
from typing import Sequence

from .config import EngineConfig
from .graph import EpisodicGraph, GraphError, detect_hubs, effective_weight, prune_candidates, remove_nodes
from .prompts import render_extraction
from .types import Category, ConsolidationEvent, MemoryNode, SemanticRecord, unit_normalize

logger = logging.getLogger(__name__)


def extract_cluster(graph: EpisodicGraph, hub_id: int, current_step: int, config: EngineConfig) -> list[int]:
    """The hub plus its strongest neighbors.

    Neighbors qualify when their effective edge weight to the hub is at
    least ``config.cluster_floor``; at most ``cluster_max_neighbors`` are
    kept, strongest first.  The hub is always the first element.
    """
    if hub_id not in graph.nodes:
        raise GraphError(f"unknown hub id {hub_id}")
    floor = config.cluster_floor
    weighted = []
    for j in graph.neighbors(hub_id):
        w = effective_weight(graph.edge(hub_id, j), current_step, config)
        if w >= floor:
            weighted.append((w, j))
    weighted.sort(key=lambda t: (-t[0], t[1]))
    return [hub_id] + [j for _, j in weighted[: config.cluster_max_neighbors]]


_SECTIONS = (
    (re.compile(r"USER\s+CHARACTERISTICS", re.I), Category.USER_MODEL),
    (re.compile(r"FACTUAL\s+INFORMATION", re.I), Category.FACTUAL),
    (re.compile(r"AGENT\s+(KNOWLEDGE|PERSONA)", re.I), Category.AGENT_KNOWLEDGE),
)
_DASH = re.compile(r"^[-*•+]\s+(.*)$")
_NUMBERED = re.compile(r"^\d+[.)]\s+(.*)$")


def _section_of(line: str) -> Category | None:
    return next((cat for pat, cat in _SECTIONS if pat.search(line)), None)


def _is_header(text: str) -> bool:
    return text.rstrip("*# ").endswith(":")


def parse_distillation(text: str) -> list[tuple[Category, str]]:
    """Split an extraction response into ``(category, statement)`` pairs.

    Bullets are attributed to the most recent recognised section header.
    Bullets before any header count as user-model entries; bullets under an
    unrecognised header are dropped.
    """
    out: list[tuple[Category, str]] = []
    current: Category | None = Category.USER_MODEL
    for raw in (text or "").splitlines():
        line = raw.strip()
        if not line:
            continue
        dash = _DASH.match(line)
        body = dash.group(1) if dash else line
        numbered = _NUMBERED.match(body)
        if numbered:
            body = numbered.group(1)
        section = _section_of(body)
        if section is not None and (_is_header(body) or not dash):
            current = section
            continue
        if not dash and _is_header(body):
            current = None
            continue
        if not (dash or numbered):
            logger.debug("dropping unparseable distillation line: %r", line)
            continue
        if current is None:
            logger.debug("dropping bullet under unrecognised section: %r", line)
            continue
        statement = body.strip().strip("*").strip()
        if statement:
            out.append((current, statement))
    return out


def distill(
    cluster_nodes: Sequence[MemoryNode],
    chat,
    embedder,
    *,
    source_hub: int | None = None,
    created_at: datetime | None = None,
    first_id: int = 0,
    dim: int | None = None,
    raise_errors: bool = False,
) -> list[SemanticRecord]:
    """Ask the chat backend to abstract a cluster into semantic records.

    Every record cites the whole cluster as evidence.  Backend failures are
    logged and yield an empty list unless ``raise_errors`` is set.
    """
    if not cluster_nodes:
        raise ValueError("cannot distill an empty cluster")
    evidence = [n.id for n in cluster_nodes]
    hub = evidence[0] if source_hub is None else source_hub
    when = created_at or max(n.timestamp for n in cluster_nodes)
    system, user = render_extraction(cluster_nodes)
    try:
        response = chat.chat(system, user)
        entries = parse_distillation(response)
        records = []
        for offset, (category, statement) in enumerate(entries):
            records.append(
                SemanticRecord(
                    id=first_id + offset,
                    category=category,
                    statement=statement,
                    confidence=1.0,
                    evidence=list(evidence),
                    embedding=unit_normalize(embedder.embed_text(statement), dim),
                    created_at=when,
                    source_hub=hub,
                )
            )
    except Exception:
        if raise_errors:
            raise
        logger.exception("distillation of hub %s failed", hub)
        return []
    return records


def run_reflection(engine, now: datetime) -> list[ConsolidationEvent]:
    """Distill every hub outside its cooldown window.

    A hub whose distillation fails is left out of cooldown so it is retried
    on the next pass; other hubs are unaffected.
    """
    config: EngineConfig = engine.config
    if not config.enable_reflective or engine.chat is None:
        return []
    graph = engine.graph
    step = graph.step
    events = []
    for hub in detect_hubs(graph, step, config, engine.hub_cooldowns):
        cluster = extract_cluster(graph, hub, step, config)
        try:
            records = distill(
                [graph.nodes[i] for i in cluster],
                engine.chat,
                engine.embedder,
                source_hub=hub,
                created_at=now,
                first_id=engine.next_record_id,
                dim=engine.dim,
                raise_errors=True,
            )
        except Exception:
            logger.exception("distillation of hub %s failed; will retry", hub)
            continue
        for rec in records:
            engine.semantic[rec.id] = rec
        engine.next_record_id += len(records)
        event = ConsolidationEvent(hub, cluster, [r.id for r in records], step, now)
        engine.events.append(event)
        engine.hub_cooldowns[hub] = step
        events.append(event)
    return events


def run_forgetting(engine, now: datetime) -> list[int]:
    config: EngineConfig = engine.config
    if not config.enable_forgetting:
        return []
    doomed = prune_candidates(engine.graph, now, engine.graph.step, config)
    if doomed:
        remove_nodes(engine.graph, doomed, engine.semantic.values())
        for i in doomed:
            engine.hub_cooldowns.pop(i, None)
    return doomed
