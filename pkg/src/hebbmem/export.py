"""Read-only views of an engine: DOT graph, weight heatmap, summary stats."""

from __future__ import annotations

import csv
import io
from datetime import datetime

import numpy as np

from .engine import MemoryEngine
from .graph import associative_strength, detect_hubs, effective_weight, prune_candidates

HUB, NORMAL, PRUNE = "hub", "normal", "prune-candidate"

_STYLE = {
    HUB: 'color="#b22222", fillcolor="#f4a6a6", style="filled,solid"',
    NORMAL: 'color="#1f4e9c", fillcolor="#a9c4eb", style="filled,solid"',
    PRUNE: 'color="#808080", fillcolor="#dddddd", style="filled,dashed"',
}


def lifecycle_status(engine: MemoryEngine, now: datetime | None = None) -> dict[int, str]:
    """Hub / normal / prune-candidate label for every node; cooldowns are ignored."""
    now = now or engine.latest_time()
    g, cfg = engine.graph, engine.config
    hubs = set(detect_hubs(g, g.step, cfg))
    prune = set(prune_candidates(g, now, g.step, cfg)) if now is not None else set()
    return {i: HUB if i in hubs else PRUNE if i in prune else NORMAL for i in sorted(g.nodes)}


def _dot_string(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", " ") + '"'


def to_dot(engine: MemoryEngine, now: datetime | None = None, *, label_chars: int = 32, max_penwidth: float = 6.0) -> str:
    g, cfg = engine.graph, engine.config
    status = lifecycle_status(engine, now)
    weights = {k: effective_weight(e, g.step, cfg) for k, e in sorted(g.edges.items())}
    top = max(weights.values(), default=0.0)
    out = ["graph memory {", "  node [shape=circle, fontsize=10];"]
    for i in sorted(g.nodes):
        n = g.nodes[i]
        snippet = n.text if len(n.text) <= label_chars else n.text[: label_chars - 1] + "…"
        label = _dot_string(f"{i}: {snippet}")
        out.append(f"  n{i} [label={label}, class={_dot_string(status[i])}, {_STYLE[status[i]]}];")
    for (a, b), w in weights.items():
        pen = 0.5 + (max_penwidth - 0.5) * (w / top if top > 0 else 0.0)
        out.append(f"  n{a} -- n{b} [w={w:.6f}, penwidth={pen:.3f}];")
    out.append("}")
    return "\n".join(out) + "\n"


def weight_matrix(engine: MemoryEngine, first: int = 20) -> tuple[list[int], np.ndarray]:
    """Pairwise effective weights among the ``first`` lowest node ids; zero diagonal."""
    g, cfg = engine.graph, engine.config
    ids = sorted(g.nodes)[: max(0, first)]
    mat = np.zeros((len(ids), len(ids)))
    for r, i in enumerate(ids):
        for c, j in enumerate(ids):
            if i != j:
                e = g.edge(i, j)
                if e is not None:
                    mat[r, c] = effective_weight(e, g.step, cfg)
    return ids, mat


def heatmap_csv(engine: MemoryEngine, first: int = 20) -> str:
    _, mat = weight_matrix(engine, first)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    for row in mat:
        writer.writerow(f"{x:.6f}" for x in row)
    return buf.getvalue()


def summary(engine: MemoryEngine) -> dict:
    g, cfg = engine.graph, engine.config
    weights = np.array([effective_weight(e, g.step, cfg) for _, e in sorted(g.edges.items())])
    dist = {}
    if weights.size:
        q = np.quantile(weights, [0.0, 0.25, 0.5, 0.75, 1.0])
        dist = {"min": q[0], "p25": q[1], "median": q[2], "p75": q[3], "max": q[4], "mean": float(weights.mean())}
    hubs = detect_hubs(g, g.step, cfg)
    return {
        "nodes": len(g.nodes),
        "edges": len(g.edges),
        "step": g.step,
        "semantic_records": len(engine.semantic),
        "consolidation_events": len(engine.events),
        "weights": {k: float(v) for k, v in dist.items()},
        "hubs": [
            {"id": h, "strength": associative_strength(g, h, g.step, cfg), "degree": g.degree(h)} for h in hubs
        ],
    }
