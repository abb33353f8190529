"""Straight-line reference implementations used as test oracles.

Nothing here imports the scoring code under test.  Loops are written out
long-hand and top-k selection is done by counting how many candidates beat
each node, rather than by sorting, so a shared bug in sort keys cannot
hide in both implementations.
"""

import math
from itertools import combinations


def dot(a, b):
    total = 0.0
    for x, y in zip(a, b):
        total += float(x) * float(y)
    return total


def reference_base(query_vec, query_keywords, now, node, alpha, tau_days):
    sim = dot(query_vec, node.embedding)
    match = 0.0
    if query_keywords:
        shared = sum(1 for k in query_keywords if k in node.keywords)
        match = shared / len(query_keywords)
    dt = (now - node.timestamp).total_seconds() / 86400.0
    if dt < 0:
        dt = 0.0
    return (sim + alpha * match) * math.exp(-dt / tau_days)


def beats(scores, a, b):
    """True when ``a`` outranks ``b``: higher score, or equal score and lower id."""
    return scores[a] > scores[b] or (scores[a] == scores[b] and a < b)


def top_by_counting(ids, scores, limit):
    placed = {}
    for i in ids:
        rank = sum(1 for j in ids if j != i and beats(scores, j, i))
        if rank < limit:
            placed[rank] = i
    return [placed[r] for r in sorted(placed)]


def reference_ranking(graph, query_vec, query_keywords, now, cfg, step, spreading=True):
    """Episodic ``(id, path)`` list for a retrieval at ``step`` over ``graph``."""
    ids = list(graph.nodes)
    base = {i: reference_base(query_vec, query_keywords, now, graph.nodes[i], cfg.alpha_keyword, cfg.tau_days) for i in ids}
    aug = dict(base)
    if spreading and cfg.beta != 0:
        for j in ids:
            extra = 0.0
            for i in sorted(ids):
                if i == j or base[i] < cfg.theta_spread:
                    continue
                e = graph.edges.get((min(i, j), max(i, j)))
                if e is None:
                    continue
                extra += base[i] * e.weight * cfg.lambda_retention ** (step - e.last_update_step)
            if extra:
                aug[j] = base[j] + cfg.beta * extra
    top = top_by_counting(ids, base, cfg.k_episodic)
    rest = [i for i in ids if i not in top and aug[i] > base[i]]
    flips = top_by_counting(rest, aug, cfg.m_flip)
    return [(i, "base") for i in top] + [(i, "flip") for i in flips]


class EagerWeights:
    """Every edge decays at every step; co-active pairs then gain ``eta``."""

    def __init__(self, eta, rho):
        self.eta, self.rho = eta, rho
        self.w = {}

    def event(self, coactive):
        for k in self.w:
            self.w[k] *= self.rho
        for pair in combinations(sorted(set(coactive)), 2):
            self.w[pair] = self.w.get(pair, 0.0) + self.eta
