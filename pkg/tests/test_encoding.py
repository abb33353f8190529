from datetime import datetime

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hebbmem.config import EngineConfig
from hebbmem.encoding import extract_keywords, ingest_turn, rank_keywords
from hebbmem.graph import EpisodicGraph
from hebbmem.types import ConversationTurn, EmbeddingError

from conftest import FailingEmbedder, TableEmbedder

T = datetime(2023, 5, 8, 12, 0)


def turn(text, session="s1", ts=T):
    return ConversationTurn(session, "t", "user", text, ts)


def test_keywords_example():
    assert extract_keywords("Met Dr. Sarah at the adoption support conference") == {
        "met", "dr", "sarah", "adoption", "support", "conference",
    }


@pytest.mark.parametrize("text", ["", "   ", "the the the", "!!! ..."])
def test_keywords_empty(text):
    assert extract_keywords(text) == frozenset()


def test_keyword_cap_orders_by_frequency_then_position():
    words = [f"w{i}" for i in range(20)]
    text = " ".join(words) + " w19 w19 w5"
    ranked = rank_keywords(text, cap=16)
    assert ranked[:2] == ["w19", "w5"]
    assert ranked[2:] == [f"w{i}" for i in range(20) if i not in (5, 19)][:14]
    assert len(extract_keywords(text)) == 16


def test_contractions_fuse_and_drop():
    assert extract_keywords("I don't know, it's Pepper's toy") == {"know", "peppers", "toy"}


@given(st.text(max_size=80))
def test_keywords_deterministic(text):
    assert extract_keywords(text) == extract_keywords(text)
    assert all(k == k.lower() and k for k in extract_keywords(text))


def test_first_turn_creates_no_edge():
    g = EpisodicGraph()
    ingest_turn(g, turn("hello there"), TableEmbedder(), EngineConfig())
    assert (len(g.nodes), len(g.edges)) == (1, 0)


def test_second_turn_seeds_adjacency_edge():
    g, cfg = EpisodicGraph(), EngineConfig()
    a = ingest_turn(g, turn("hello there"), TableEmbedder(), cfg)
    b = ingest_turn(g, turn("general kenobi"), TableEmbedder(), cfg)
    assert (len(g.nodes), len(g.edges)) == (2, 1)
    e = g.edge(a, b)
    assert e.weight == pytest.approx(0.1)
    assert e.last_update_step == g.step


def test_identical_text_makes_two_nodes():
    g, cfg = EpisodicGraph(), EngineConfig()
    a = ingest_turn(g, turn("same words"), TableEmbedder(), cfg)
    b = ingest_turn(g, turn("same words"), TableEmbedder(), cfg)
    assert a != b and len(g.nodes) == 2 and len(g.edges) == 1


def test_session_of_n_turns_forms_path():
    g, cfg, emb = EpisodicGraph(), EngineConfig(), TableEmbedder()
    ids = [ingest_turn(g, turn(f"message number {i}"), emb, cfg) for i in range(7)]
    assert len(g.edges) == 6
    assert all(g.edge(a, b) is not None for a, b in zip(ids, ids[1:]))
    assert [g.degree(i) for i in ids] == [1, 2, 2, 2, 2, 2, 1]


def test_no_seed_edge_across_sessions():
    g, cfg, emb = EpisodicGraph(), EngineConfig(), TableEmbedder()
    ingest_turn(g, turn("one", "s1"), emb, cfg)
    ingest_turn(g, turn("two", "s1"), emb, cfg)
    ingest_turn(g, turn("three", "s2"), emb, cfg)
    assert len(g.edges) == 1


def test_embedding_is_normalised():
    g = EpisodicGraph()
    emb = TableEmbedder({"big vector": [3.0, 4.0, 0, 0, 0, 0, 0, 0]})
    i = ingest_turn(g, turn("big vector"), emb, EngineConfig())
    assert np.linalg.norm(g.nodes[i].embedding) == pytest.approx(1.0, abs=1e-12)
    assert g.nodes[i].embedding[:2] == pytest.approx([0.6, 0.8])


def test_dimension_mismatch_rejected_graph_unchanged():
    g, cfg = EpisodicGraph(), EngineConfig()
    ingest_turn(g, turn("first"), TableEmbedder(dim=8), cfg, dim=8)
    before = (dict(g.nodes), dict(g.edges), g.last_node_id)
    with pytest.raises(EmbeddingError):
        ingest_turn(g, turn("second"), TableEmbedder(dim=5), cfg, dim=8)
    assert (dict(g.nodes), dict(g.edges), g.last_node_id) == before


def test_zero_vector_rejected():
    with pytest.raises(EmbeddingError):
        ingest_turn(EpisodicGraph(), turn("zero"), TableEmbedder({"zero": [0.0] * 8}), EngineConfig())


def test_backend_failure_propagates_without_insert():
    g = EpisodicGraph()
    with pytest.raises(RuntimeError):
        ingest_turn(g, turn("anything"), FailingEmbedder(), EngineConfig())
    assert not g.nodes


def test_ingestion_does_not_advance_step():
    g, cfg, emb = EpisodicGraph(), EngineConfig(), TableEmbedder()
    for i in range(3):
        ingest_turn(g, turn(f"t {i}"), emb, cfg)
    assert g.step == 0
