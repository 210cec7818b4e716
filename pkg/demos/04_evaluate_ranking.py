"""
Evaluating a scorer: correlations and rank accuracy
===================================================

Two complementary views. Against MOS labels we report PLCC/SRCC per
dimension; against preference pairs we report rank accuracy with a
tie threshold tuned by exhaustive search.
"""

import numpy as np

from mosaiq.metrics import (
    benchmark_report,
    optimize_threshold,
    rank_accuracy,
    render_metric_table,
    threshold_grid,
)
from mosaiq.model import Dimension, MosRecord, PreferenceLabel, PreferencePair, ScoreVector

rng = np.random.default_rng(99)

# --- correlations against MOS -------------------------------------------
# A decent-but-noisy predictor: right trend, some scatter.
mos_records = []
predictions = {d: {} for d in Dimension}
for k in range(40):
    for dim in Dimension:
        truth = float(rng.uniform(1.5, 4.8))
        mos_records.append(MosRecord(f"img{k:02d}", dim, round(truth, 2), 5))
        predictions[dim][f"img{k:02d}"] = truth + float(rng.normal(0, 0.45))

reports = benchmark_report(predictions, mos_records)
print(render_metric_table({"demo-scorer": reports}))

# --- rank accuracy on preference pairs ----------------------------------
# Fused scores for both sides of each pair, labels from a noisy judge.
pairs = []
fused = {}
for i in range(300):
    sa, sb = (float(x) for x in rng.uniform(1.2, 4.8, 2))
    fused[f"a{i}"], fused[f"b{i}"] = sa, sb
    gap = sa - sb + float(rng.normal(0, 0.25))
    if abs(gap) < 0.3:
        label = PreferenceLabel.TIE
    else:
        label = PreferenceLabel.A if gap > 0 else PreferenceLabel.B
    dummy = ScoreVector((3.0, 3.0, 3.0, 3.0))
    pairs.append(PreferencePair(f"p{i}", f"a{i}", f"b{i}", dummy, dummy, label))

# With no tie allowance at all, every tie label is an automatic miss.
print(f"accuracy at threshold 0.0:  {rank_accuracy(pairs, fused, 0.0):.4f}")

# The optimizer sweeps the whole grid and keeps the smallest best point.
grid = threshold_grid()
best = optimize_threshold(pairs, fused)
print(f"accuracy at threshold {best.threshold}: {best.rank_accuracy:.4f} "
      f"(searched {len(grid)} grid points)")
