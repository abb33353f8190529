"""
Dual-path retrieval and the semantic trap
=========================================

Plain similarity search misses a turn that matters when the turn shares no
vocabulary with the question.  Spreading activation recovers it through a
learned association with a turn that does match.
"""

from datetime import datetime

import numpy as np

from hebbmem import EngineConfig, MemoryEngine
from hebbmem.types import MemoryNode

QUERY = "what carried her through the hard months"
NOW = datetime(2023, 9, 1)
DIM = 8


class FixedEmbedder:
    """Maps the query to a fixed direction; nodes carry hand-made vectors."""

    def embed_text(self, text):
        v = np.zeros(DIM)
        v[0] = 1.0
        return v


def unit(sim, axis):
    v = np.zeros(DIM)
    v[0], v[axis] = sim, np.sqrt(1 - sim * sim)
    return v


def build(spreading):
    cfg = EngineConfig(beta=0.1, theta_spread=0.6, k_episodic=4, m_flip=2, enable_spreading=spreading)
    engine = MemoryEngine(cfg, FixedEmbedder())
    turns = [
        (0.82, "The support group changed everything for me"),
        (0.35, "Dr. Sarah is the one who runs it"),
        (0.50, "I tried a pottery class"),
        (0.45, "The weather was awful in March"),
        (0.40, "We painted the spare room"),
    ]
    for i, (sim, text) in enumerate(turns):
        engine.graph.add_node(MemoryNode(i, text, unit(sim, i + 1), NOW, frozenset(), speaker="Maya"))
    # the first two turns were retrieved together often enough to build a 0.52 edge
    engine.graph.add_edge(0, 1, 0.52)
    engine.dim = DIM
    return engine


###############################################################################
# Spreading off
# -------------
# Only the base path is used: top four by similarity.  Turn 1 is ranked last.

for spreading in (False, True):
    engine = build(spreading)
    result = engine.retrieve(QUERY, NOW)
    print(f"\nspreading {'on' if spreading else 'off'}")
    for r in result.episodic:
        print(f"  [{r.path:<4}] node {r.node_id}  base {r.base_score:.4f}  augmented {r.augmented_score:.4f}  "
              f"{engine.graph.nodes[r.node_id].text}")

###############################################################################
# With spreading on, turn 1 gains ``beta * 0.82 * w`` from its strong
# neighbor.  That is not enough to beat the distractors on the base path,
# but the flip path adds up to ``m_flip`` nodes whose score spreading
# raised, so the associated turn reaches the context.
