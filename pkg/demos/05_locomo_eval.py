"""
LoCoMo-style evaluation
=======================

Runs the QA harness on the bundled synthetic fixture with stub backends,
once per ablation.  Point ``DATASET`` at ``locomo10.json`` and swap in the
HTTP backends for a real run.
"""

from hebbmem import EngineConfig
from hebbmem.backends import StubChat, StubEmbedder
from hebbmem.cli import bundled_fixture
from hebbmem.eval import bleu1_score, f1_score, run_ablation_sweep

DATASET = bundled_fixture()

###############################################################################
# Metrics
# -------
# Both scores use SQuAD-style normalisation, so articles and punctuation do
# not count.

print(f1_score("At the adoption support conference.", "adoption support conference"))
print(f1_score("15 July 2023", "July 2023"))
print(round(bleu1_score("rescue cat", "a rescue cat named Biscuit"), 4))

###############################################################################
# Ablation sweep
# --------------
# Each report gets fresh stub backends, so runs are reproducible.

reports = run_ablation_sweep(DATASET, EngineConfig(), lambda: (StubEmbedder(64), StubChat.default()))
for report in reports:
    print(report.format())

row = reports[0].rows[0]
print(row.question, "->", row.prediction, f"(F1 {row.f1:.2f}, paths {row.paths})")
