"""
From rating-word logits to dimension scores
===========================================

The scorer never sees pixels. A backend (here: an offline file of saved
model outputs) returns five logits, one per rating word, and the score
is the probability-weighted mean of the values 5..1.
"""

import numpy as np

from mosaiq.model import Dimension
from mosaiq.prompts import PromptType, build_query
from mosaiq.scoring import (
    LogitRecord,
    OfflineLogitStore,
    Scorer,
    normalize_logits,
    score_from_logits,
)

# The arithmetic first, no plumbing. Logits -> softmax -> expected value.
logits = [2.0, 1.0, 0.0, 0.0, 0.0]
dist = normalize_logits(logits)
print("probabilities:", [f"{p:.3f}" for p in dist.probabilities])
print(f"expected score: {score_from_logits(logits):.3f}  (out of 5)")

# The score only depends on logit *differences*; a constant shift is the
# same distribution.
print("shifted by +100:", f"{score_from_logits([v + 100 for v in logits]):.3f}")

# Flat logits mean total uncertainty, which lands exactly on the middle
# rating.
print("uniform logits ->", score_from_logits([0.3] * 5))

# Now the plumbing. An offline store holds one record per
# (image, dimension); the Scorer reads it and caches what it computes.
rng = np.random.default_rng(42)
records = [
    LogitRecord(f"img{k}", dim, tuple(rng.normal(0, 2, 5)), "demo-model")
    for k in range(3)
    for dim in Dimension
]
scorer = Scorer(store=OfflineLogitStore(records))

for k in range(3):
    vec = scorer.score_vector(f"img{k}")
    cells = ", ".join(f"{d.value}={v:.2f}" for d, v in zip(Dimension, vec.values))
    print(f"img{k}: {cells}")

# This is the query a remote backend would answer for layout. The template
# asks for a single rating word; the backend returns that word's logits.
template = build_query(Dimension.LAYOUT, PromptType.TYPE2)
print()
print("query sent for layout:")
print(" ", template.query_text)
print("response stub:")
print(" ", template.response_stub)
