"""
Consolidation and forgetting
============================

A conversation is ingested with deterministic stub backends.  Repeated
questions build up hubs, which are distilled into semantic records, while
turns nobody asks about fade and are eventually pruned.
"""

from datetime import timedelta

from hebbmem import EngineConfig, MemoryEngine
from hebbmem.backends import StubChat, StubEmbedder
from hebbmem.cli import bundled_fixture
from hebbmem.eval import load_locomo

conv = load_locomo(bundled_fixture())[0]
# a low hub threshold and weak seed edges make both lifecycle passes visible on a tiny fixture
cfg = EngineConfig(delta_hub=0.5, w_initial=0.02)
engine = MemoryEngine(cfg, StubEmbedder(32), StubChat.default())
engine.ingest_many(conv.turns)
print(engine)

###############################################################################
# ``recall`` is retrieve followed by one reflection pass and one forgetting
# pass, the schedule used throughout evaluation.

for week in range(4):
    now = conv.last_time + timedelta(days=25 * week)
    for qa in conv.qa[:4]:
        engine.recall(qa.question, now)
    print(f"{now:%d %b %Y}: {engine}")

###############################################################################
# Every consolidation event names the hub, its cluster and the records it
# produced.  Records keep their evidence ids even after those turns are gone.

for ev in engine.events[:3]:
    print(f"hub {ev.hub_id} at step {ev.step}: cluster {ev.cluster}")
    for rid in ev.record_ids[:2]:
        rec = engine.semantic[rid]
        print(f"   {rec.category.value:<12} {rec.statement[:70]}  stale={rec.stale_evidence}")

survivors = sorted(engine.graph.nodes)
print(f"{len(conv.turns) - len(survivors)} of {len(conv.turns)} turns forgotten; kept {survivors}")
