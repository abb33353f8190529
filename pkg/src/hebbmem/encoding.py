"""Turn conversation turns into graph nodes."""

from __future__ import annotations

import re
from collections import Counter

from .config import EngineConfig
from .graph import EpisodicGraph
from .types import ConversationTurn, MemoryNode, unit_normalize

# Apostrophes are dropped before splitting, so contractions appear fused ("dont").
STOPWORDS = frozenset(
    """
    a about above after again against all am an and any are arent as at be because been before being
    below between both but by can cant cannot could couldnt did didnt do does doesnt doing dont down
    during each few for from further had hadnt has hasnt have havent having he hed hell hes her here
    heres hers herself him himself his how hows i id ill im ive if in into is isnt it its itself lets
    me more most mustnt my myself no nor not of off on once only or other ought our ours ourselves out
    over own same shant she shed shell shes should shouldnt so some such than that thats the their
    theirs them themselves then there theres these they theyd theyll theyre theyve this those through
    to too under until up very was wasnt we wed well were weve werent what whats when whens where
    wheres which while who whos whom why whys with wont would wouldnt you youd youll youre youve your
    yours yourself yourselves just also yeah yes oh ok okay really s t
    """.split()
)

_APOSTROPHES = re.compile(r"['’`]")
_NON_WORD = re.compile(r"[^\w]+|_+")


def tokenize(text: str) -> list[str]:
    """Lowercase, punctuation-stripped tokens in text order."""
    text = _APOSTROPHES.sub("", text.lower())
    return [t for t in _NON_WORD.split(text) if t]


def rank_keywords(text: str, cap: int = 16) -> list[str]:
    """Non-stopword tokens ordered by frequency, then first occurrence."""
    tokens = [t for t in tokenize(text) if t not in STOPWORDS]
    counts = Counter(tokens)
    first_seen: dict[str, int] = {}
    for pos, tok in enumerate(tokens):
        first_seen.setdefault(tok, pos)
    ranked = sorted(counts, key=lambda t: (-counts[t], first_seen[t]))
    return ranked[:cap]


def extract_keywords(text: str, cap: int = 16) -> frozenset[str]:
    return frozenset(rank_keywords(text, cap))


def ingest_turn(graph: EpisodicGraph, turn: ConversationTurn, embedder, config: EngineConfig, dim: int | None = None) -> int:
    """Add ``turn`` as a new node and link it to its predecessor in the same session.

    Embedding happens before any mutation, so a backend error or a
    dimension mismatch leaves the graph untouched.
    """
    if not turn.text or not turn.text.strip():
        raise ValueError("cannot ingest an empty turn")
    embedding = unit_normalize(embedder.embed_text(turn.text), dim)

    if graph.last_session_id != turn.session_id:
        graph.last_node_id = None
    node_id = graph.next_node_id
    node = MemoryNode(
        id=node_id,
        text=turn.text,
        embedding=embedding,
        timestamp=turn.timestamp,
        keywords=extract_keywords(turn.text, config.keyword_cap),
        speaker=turn.speaker,
        created_step=graph.step,
        session_id=turn.session_id,
    )
    graph.add_node(node)
    if graph.last_node_id is not None and graph.last_node_id in graph.nodes:
        graph.add_edge(graph.last_node_id, node_id, config.w_initial, graph.step)
    graph.last_node_id = node_id
    graph.last_session_id = turn.session_id
    return node_id
