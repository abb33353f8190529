"""
Snapshots and exports
=====================

The whole engine round-trips through one JSON document.  Exports render the
graph for Graphviz and the pairwise weights as a CSV heatmap.
"""

import tempfile
from pathlib import Path

from hebbmem import EngineConfig, MemoryEngine, load_snapshot, save_snapshot
from hebbmem.backends import StubChat, StubEmbedder
from hebbmem.cli import bundled_fixture
from hebbmem.eval import load_locomo
from hebbmem.export import heatmap_csv, lifecycle_status, summary, to_dot

conv = load_locomo(bundled_fixture())[0]
engine = MemoryEngine(EngineConfig(delta_hub=0.5), StubEmbedder(32), StubChat.default())
engine.ingest_many(conv.turns)
for qa in conv.qa:
    engine.recall(qa.question, conv.last_time)

out = Path(tempfile.mkdtemp())
snap = out / "memory.json"
save_snapshot(engine, snap)
print(f"{snap}: {snap.stat().st_size} bytes")
print(snap.read_text().splitlines()[1])

###############################################################################
# Loading gives an engine with identical state; saving it again gives the
# same bytes.

again = load_snapshot(snap, embedder=StubEmbedder(32), chat=StubChat.default())
print("state equal:", again.state_equals(engine))
save_snapshot(again, out / "copy.json")
print("bytes equal:", snap.read_bytes() == (out / "copy.json").read_bytes())

###############################################################################
# Lifecycle labels drive the DOT styling: hubs red, ordinary nodes blue,
# prune candidates gray and dashed.

labels = lifecycle_status(engine)
print({status: sum(1 for s in labels.values() if s == status) for status in ("hub", "normal", "prune-candidate")})
(out / "graph.dot").write_text(to_dot(engine))
(out / "heatmap.csv").write_text(heatmap_csv(engine, first=20))
print(heatmap_csv(engine, first=5))
print({k: v for k, v in summary(engine).items() if k != "hubs"})
