from datetime import timedelta

import numpy as np
import pytest

from hebbmem import EngineConfig, MemoryEngine
from hebbmem.backends import StubChat, StubEmbedder
from hebbmem.consolidation import distill, extract_cluster, parse_distillation
from hebbmem.graph import EpisodicGraph, GraphError
from hebbmem.types import Category

from conftest import T0, add_node, basis

DIM = 8
CFG = EngineConfig()

TWO_PLUS_ONE = """1. USER CHARACTERISTICS:
- values family time
- prefers quiet mornings

2. FACTUAL INFORMATION:
- adopted a dog named Biscuit in March 2023
"""


def star_graph(weights, dim=DIM):
    g = EpisodicGraph()
    add_node(g, 0, basis(dim, 0), text="hub turn")
    for j, w in enumerate(weights, 1):
        add_node(g, j, basis(dim, j % dim), ts=T0 + timedelta(minutes=j), text=f"neighbor {j}")
        g.add_edge(0, j, w)
    return g


def hub_engine(config=CFG, chat=None):
    """Engine whose node 0 is a hub (three edges of 2.0 against a 5.0 threshold)."""
    engine = MemoryEngine(config, StubEmbedder(DIM), chat or StubChat.default())
    engine.graph = star_graph([2.0, 2.0, 2.0])
    engine.dim = DIM
    return engine


# ---- clusters -----------------------------------------------------------------


def test_cluster_of_isolated_hub():
    assert extract_cluster(star_graph([]), 0, 0, CFG) == [0]


def test_cluster_applies_weight_floor():
    cluster = extract_cluster(star_graph([0.5, 0.3, 0.01]), 0, 0, CFG)
    assert cluster == [0, 1, 2]


def test_cluster_caps_at_ten_strongest():
    weights = [1.0 + 0.01 * j for j in range(15)]
    cluster = extract_cluster(star_graph(weights), 0, 0, CFG)
    assert cluster[0] == 0 and len(cluster) == 11
    assert cluster[1:] == list(range(15, 5, -1))


def test_cluster_unknown_hub():
    with pytest.raises(GraphError):
        extract_cluster(star_graph([]), 7, 0, CFG)


# ---- parsing and distillation -------------------------------------------------


def test_parse_two_sections():
    assert parse_distillation(TWO_PLUS_ONE) == [
        (Category.USER_MODEL, "values family time"),
        (Category.USER_MODEL, "prefers quiet mornings"),
        (Category.FACTUAL, "adopted a dog named Biscuit in March 2023"),
    ]


def test_parse_empty():
    assert parse_distillation("") == []


def test_parse_salvages_bullets_and_drops_noise():
    text = "Sure! Here is what I found.\n**USER CHARACTERISTICS:**\n* likes jazz\nrandom prose\nOTHER NOTES:\n- dropped\nFACTUAL INFORMATION:\n- kept"
    assert parse_distillation(text) == [(Category.USER_MODEL, "likes jazz"), (Category.FACTUAL, "kept")]


def test_parse_third_section():
    text = "3. AGENT KNOWLEDGE:\n- the assistant is patient"
    assert parse_distillation(text) == [(Category.AGENT_KNOWLEDGE, "the assistant is patient")]


def cluster_nodes():
    return [star_graph([1.0, 1.0]).nodes[i] for i in (0, 1, 2)]


def test_distill_builds_records():
    recs = distill(cluster_nodes(), StubChat(fallback=TWO_PLUS_ONE), StubEmbedder(DIM), first_id=7)
    assert [r.category for r in recs] == [Category.USER_MODEL, Category.USER_MODEL, Category.FACTUAL]
    assert [r.id for r in recs] == [7, 8, 9]
    for r in recs:
        assert r.evidence == [0, 1, 2] and r.confidence == 1.0 and r.source_hub == 0
        assert np.isclose(np.linalg.norm(r.embedding), 1.0)


def test_distill_empty_response():
    assert distill(cluster_nodes(), StubChat(fallback=""), StubEmbedder(DIM)) == []


def test_distill_single_trait():
    chat = StubChat(fallback="- enjoys outdoor activities (evidence: hiking turns)")
    (rec,) = distill(cluster_nodes(), chat, StubEmbedder(DIM))
    assert rec.category is Category.USER_MODEL
    assert rec.statement == "enjoys outdoor activities (evidence: hiking turns)"


def test_distill_prompt_lists_turns_chronologically():
    chat = StubChat(fallback="")
    distill(list(reversed(cluster_nodes())), chat, StubEmbedder(DIM))
    system, user = chat.calls[0]
    assert "knowledge extraction engine" in system
    assert user.index("hub turn") < user.index("neighbor 1") < user.index("neighbor 2")


def test_distill_backend_failure_is_swallowed():
    def boom(system, user):
        raise ConnectionError("backend down")

    assert distill(cluster_nodes(), StubChat(fallback=boom), StubEmbedder(DIM)) == []
    with pytest.raises(ConnectionError):
        distill(cluster_nodes(), StubChat(fallback=boom), StubEmbedder(DIM), raise_errors=True)


def test_distill_rejects_empty_cluster():
    with pytest.raises(ValueError):
        distill([], StubChat(), StubEmbedder(DIM))


# ---- reflection ---------------------------------------------------------------


def test_reflection_without_hubs():
    engine = hub_engine()
    engine.graph = star_graph([1.0])
    assert engine.run_reflection(T0) == []


def test_reflection_distills_the_hub():
    engine = hub_engine(chat=StubChat(fallback=TWO_PLUS_ONE))
    edges_before = {k: (e.weight, e.last_update_step) for k, e in engine.graph.edges.items()}
    (event,) = engine.run_reflection(T0)
    assert event.hub_id == 0 and event.cluster[0] == 0 and set(event.cluster) == {0, 1, 2, 3}
    assert len(engine.semantic) == 3 and event.record_ids == [0, 1, 2]
    assert all(set(r.evidence) <= set(event.cluster) for r in engine.semantic.values())
    assert {k: (e.weight, e.last_update_step) for k, e in engine.graph.edges.items()} == edges_before
    assert engine.hub_cooldowns == {0: 0}


def test_reflection_respects_cooldown():
    engine = hub_engine(EngineConfig(lambda_retention=1.0))
    counts = []
    for step in range(0, 250, 10):
        engine.graph.step = step
        engine.run_reflection(T0)
        counts.append(len(engine.events))
    # events at steps 0, 100 and 200 only
    assert counts[-1] == 3 and [e.step for e in engine.events] == [0, 100, 200]


def test_reflection_disabled():
    engine = hub_engine(EngineConfig(enable_reflective=False))
    assert engine.run_reflection(T0) == [] and engine.semantic == {} and engine.hub_cooldowns == {}


def test_failed_hub_is_retried():
    calls = []

    def flaky(system, user):
        calls.append(1)
        if len(calls) == 1:
            raise TimeoutError("slow backend")
        return TWO_PLUS_ONE

    engine = hub_engine(chat=StubChat(fallback=flaky))
    assert engine.run_reflection(T0) == [] and engine.hub_cooldowns == {}
    assert len(engine.run_reflection(T0)) == 1


def test_failing_hub_does_not_block_others():
    engine = hub_engine(chat=StubChat([(r"hub turn", lambda s, u: 1 / 0)], fallback=TWO_PLUS_ONE))
    g = engine.graph
    for i in (10, 11, 12):
        add_node(g, i, basis(DIM, 1), text=f"second cluster {i}")
    g.add_edge(10, 11, 3.0)
    g.add_edge(10, 12, 3.0)
    events = engine.run_reflection(T0)
    assert [e.hub_id for e in events] == [10]


# ---- forgetting ---------------------------------------------------------------

NOW = T0 + timedelta(days=90)


def test_forgetting_on_fresh_graph():
    engine = hub_engine()
    assert engine.run_forgetting(T0) == []


def test_forgetting_removes_stale_isolated_node():
    engine = hub_engine()
    add_node(engine.graph, 9, basis(DIM, 4), ts=NOW - timedelta(days=60))
    assert engine.run_forgetting(NOW) == [9]
    assert 9 not in engine.graph.nodes


def test_forgetting_disabled():
    engine = hub_engine(EngineConfig(enable_forgetting=False))
    add_node(engine.graph, 9, basis(DIM, 4), ts=NOW - timedelta(days=60))
    assert engine.run_forgetting(NOW) == [] and 9 in engine.graph.nodes


def test_forgetting_never_removes_hub():
    engine = hub_engine()
    for node in engine.graph.nodes.values():
        node.timestamp = NOW - timedelta(days=400)
    assert 0 not in engine.run_forgetting(NOW)


def test_forgetting_marks_evidence_stale():
    engine = hub_engine(chat=StubChat(fallback=TWO_PLUS_ONE))
    engine.run_reflection(T0)
    engine.graph.step = 2000  # every edge has decayed to nothing
    removed = engine.run_forgetting(NOW + timedelta(days=400))
    assert removed == [0, 1, 2, 3]
    assert all(r.stale_evidence == r.evidence for r in engine.semantic.values())
