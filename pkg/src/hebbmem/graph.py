"""Episodic graph with lazily decayed Hebbian edges.

Weights are stored together with the step at which they were last
materialised.  Reading an edge at step ``t`` multiplies by
``retention ** (t - last_update_step)``, which is exactly what an eager
per-step sweep would have produced, at O(|coactivated|^2) cost per event.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timedelta
from itertools import combinations
from typing import Iterable, Mapping

from .config import EngineConfig
from .types import HebbianEdge, MemoryNode, SemanticRecord, edge_key


class GraphError(KeyError):
    """Unknown node id or an illegal graph operation."""

    def __str__(self) -> str:  # KeyError quotes its message otherwise
        return str(self.args[0]) if self.args else ""


@dataclass
class EpisodicGraph:
    nodes: dict[int, MemoryNode] = field(default_factory=dict)
    edges: dict[tuple[int, int], HebbianEdge] = field(default_factory=dict)
    adjacency: dict[int, set[int]] = field(default_factory=dict)
    step: int = 0
    last_node_id: int | None = None
    last_session_id: str | None = None
    next_node_id: int = 0

    def __len__(self) -> int:
        return len(self.nodes)

    def add_node(self, node: MemoryNode) -> None:
        if node.id in self.nodes:
            raise GraphError(f"node {node.id} already exists")
        self.nodes[node.id] = node
        self.adjacency[node.id] = set()
        self.next_node_id = max(self.next_node_id, node.id + 1)

    def add_edge(self, i: int, j: int, weight: float, step: int | None = None) -> HebbianEdge:
        self._require([i, j])
        a, b = edge_key(i, j)
        if (a, b) in self.edges:
            raise GraphError(f"edge {(a, b)} already exists")
        edge = HebbianEdge(a, b, float(weight), self.step if step is None else step)
        self.edges[(a, b)] = edge
        self.adjacency[a].add(b)
        self.adjacency[b].add(a)
        return edge

    def edge(self, i: int, j: int) -> HebbianEdge | None:
        if i == j:
            return None
        return self.edges.get(edge_key(i, j))

    def neighbors(self, node_id: int) -> set[int]:
        try:
            return self.adjacency[node_id]
        except KeyError:
            raise GraphError(f"unknown node id {node_id}") from None

    def degree(self, node_id: int) -> int:
        return len(self.neighbors(node_id))

    def _require(self, ids: Iterable[int]) -> None:
        missing = sorted(i for i in set(ids) if i not in self.nodes)
        if missing:
            raise GraphError(f"unknown node id(s) {missing}")

    def check_invariants(self) -> list[str]:
        """Structural consistency problems, empty when the graph is sound."""
        problems = []
        if set(self.adjacency) != set(self.nodes):
            problems.append("adjacency keys do not match node ids")
        for i, nbrs in self.adjacency.items():
            if i in nbrs:
                problems.append(f"self-loop on node {i}")
            for j in nbrs:
                if i not in self.adjacency.get(j, ()):
                    problems.append(f"asymmetric adjacency between {i} and {j}")
                elif i != j and edge_key(i, j) not in self.edges:
                    problems.append(f"adjacency {i}-{j} has no edge")
        for (a, b), e in self.edges.items():
            if (e.a, e.b) != (a, b) or a >= b:
                problems.append(f"edge key {(a, b)} does not match endpoints {(e.a, e.b)}")
            if b not in self.adjacency.get(a, ()) or a not in self.adjacency.get(b, ()):
                problems.append(f"edge {(a, b)} missing from adjacency")
            if e.weight < 0:
                problems.append(f"edge {(a, b)} has negative weight")
            if e.last_update_step > self.step:
                problems.append(f"edge {(a, b)} updated in the future")
        return problems


def effective_weight(edge: HebbianEdge, current_step: int, config: EngineConfig) -> float:
    elapsed = current_step - edge.last_update_step
    if elapsed < 0:
        raise ValueError(
            f"edge {edge.key} read at step {current_step} before its last update {edge.last_update_step}"
        )
    if elapsed == 0:
        return edge.weight
    return edge.weight * config.lambda_retention**elapsed


def reinforce(graph: EpisodicGraph, coactivated: Iterable[int], config: EngineConfig) -> int:
    """Apply one Hebbian update to every pair in ``coactivated``.

    The caller advances ``graph.step`` for the retrieval event beforehand.
    Missing edges start from zero, so a new pair ends at exactly ``eta``.
    Returns the number of edges touched.
    """
    ids = sorted(set(coactivated))
    graph._require(ids)
    step = graph.step
    for i, j in combinations(ids, 2):
        e = graph.edge(i, j)
        if e is None:
            e = graph.add_edge(i, j, 0.0, step)
        e.weight = effective_weight(e, step, config) + config.eta
        e.last_update_step = step
        e.co_activation_count += 1
    n = len(ids)
    return n * (n - 1) // 2


def associative_strength(graph: EpisodicGraph, node_id: int, current_step: int, config: EngineConfig) -> float:
    total = 0.0
    for j in sorted(graph.neighbors(node_id)):
        total += effective_weight(graph.edges[edge_key(node_id, j)], current_step, config)
    return total


def in_cooldown(node_id: int, current_step: int, cooldowns: Mapping[int, int] | None, cooldown_steps: int) -> bool:
    if not cooldowns or node_id not in cooldowns:
        return False
    return current_step - cooldowns[node_id] < cooldown_steps


def detect_hubs(
    graph: EpisodicGraph,
    current_step: int,
    config: EngineConfig,
    cooldowns: Mapping[int, int] | None = None,
) -> list[int]:
    """Nodes whose associative strength is strictly above ``delta_hub``.

    ``cooldowns`` maps hub id to the step it was last consolidated; those
    still inside ``config.cooldown_steps`` are skipped.  Sorted by id.
    """
    hubs = []
    for node_id in sorted(graph.nodes):
        if in_cooldown(node_id, current_step, cooldowns, config.cooldown_steps):
            continue
        if associative_strength(graph, node_id, current_step, config) > config.delta_hub:
            hubs.append(node_id)
    return hubs


def high_degree_nodes(graph: EpisodicGraph, config: EngineConfig) -> list[int]:
    """Diagnostic view: nodes with degree at or above ``hub_degree_threshold``."""
    if config.hub_degree_threshold is None:
        return []
    return [i for i in sorted(graph.nodes) if graph.degree(i) >= config.hub_degree_threshold]


def _days(delta: timedelta) -> float:
    return delta.total_seconds() / 86400.0


def prune_criteria(
    graph: EpisodicGraph, node_id: int, now: datetime, current_step: int, config: EngineConfig
) -> tuple[bool, bool, bool]:
    """(weak, dormant, unaccessed) flags for one node."""
    node = graph.nodes[node_id]
    weak = associative_strength(graph, node_id, current_step, config) < config.delta_prune
    dormant = _days(now - node.last_active) > config.delta_age_days
    unaccessed = node.last_access_time is None or _days(now - node.last_access_time) > config.recency_window
    return weak, dormant, unaccessed


def prune_candidates(graph: EpisodicGraph, now: datetime, current_step: int, config: EngineConfig) -> list[int]:
    return [i for i in sorted(graph.nodes) if all(prune_criteria(graph, i, now, current_step, config))]


def remove_nodes(
    graph: EpisodicGraph,
    ids: Iterable[int],
    records: Iterable[SemanticRecord] = (),
) -> int:
    """Delete nodes and their incident edges.

    Semantic records citing a removed node keep the id in ``evidence`` and
    also list it in ``stale_evidence``.
    """
    ids = sorted(set(ids))
    graph._require(ids)
    for i in ids:
        for j in list(graph.adjacency[i]):
            del graph.edges[edge_key(i, j)]
            graph.adjacency[j].discard(i)
        del graph.adjacency[i]
        del graph.nodes[i]
        if graph.last_node_id == i:
            graph.last_node_id = None
    gone = set(ids)
    for rec in records:
        newly = [e for e in rec.evidence if e in gone and e not in rec.stale_evidence]
        if newly:
            rec.stale_evidence = sorted(set(rec.stale_evidence) | set(newly))
    return len(ids)
