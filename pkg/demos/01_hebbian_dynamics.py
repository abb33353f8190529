"""
Hebbian edge dynamics
=====================

Edges between memory nodes grow when both ends are retrieved together and
fade otherwise.  This script drives one edge through a long run of
co-activations, then leaves it alone and watches it decay.
"""

import math
from datetime import datetime

import numpy as np

from hebbmem import EngineConfig
from hebbmem.graph import EpisodicGraph, associative_strength, effective_weight, reinforce
from hebbmem.types import MemoryNode

cfg = EngineConfig()
print(f"learning rate {cfg.eta}, retention per step {cfg.lambda_retention}")


def node(i):
    v = np.zeros(4)
    v[i % 4] = 1.0
    return MemoryNode(id=i, text=f"turn {i}", embedding=v, timestamp=datetime(2023, 5, 8), keywords=frozenset(), speaker="user")


g = EpisodicGraph()
for i in range(3):
    g.add_node(node(i))

###############################################################################
# Constant co-activation
# ----------------------
# Each retrieval event advances the step, then every pair in the retrieved set
# is reinforced.  The weight approaches eta / (1 - retention) = 4.0.

for step in range(1, 10_001):
    g.step = step
    reinforce(g, [0, 1], cfg)
    if step in (1, 10, 100, 1000, 10_000):
        print(f"step {step:>6}: w(0,1) = {g.edge(0, 1).weight:.6f}")

###############################################################################
# Decay without reinforcement
# ---------------------------
# Weights are stored lazily; reading one at a later step applies the missing
# decay in closed form.  Nothing is written back.

stop = g.step
horizon = math.ceil(math.log(0.01 / 4.0) / math.log(cfg.lambda_retention))
for extra in (0, 100, 500, horizon):
    print(f"{extra:>5} idle steps: w = {effective_weight(g.edge(0, 1), stop + extra, cfg):.6f}")
print(f"below 0.01 after at most {horizon} idle steps")

###############################################################################
# Associative strength
# --------------------
# A node's strength is the sum of its live edge weights.  Nodes above
# ``delta_hub`` become hubs and get distilled into semantic memory.

g.step += 1
reinforce(g, [1, 2], cfg)
for i in range(3):
    print(f"node {i}: degree {g.degree(i)}, strength {associative_strength(g, i, g.step, cfg):.4f}")
