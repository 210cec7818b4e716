#!/usr/bin/env python3
"""Using fused scores as a reward signal.

Two consumers: best-of-N picks the strongest candidate out of a sampled
batch, and group-relative advantages feed a clipped policy-gradient
surrogate for fine-tuning a generator.
"""

import numpy as np

from mosaiq.model import FusionWeights, ScoreVector
from mosaiq.rewards import (
    CandidateSet,
    GrpoStep,
    RewardGroup,
    best_of_n,
    grpo_advantages,
    grpo_surrogate,
    reward_stats,
    rescale_to_unit,
)

rng = np.random.default_rng(5)
weights = FusionWeights((0.25, 0.25, 0.25, 0.25))

# --- best-of-N ------------------------------------------------------------
# Four renders of the same prompt; keep the best one.
candidates = CandidateSet(
    "prompt-living-room",
    tuple(
        (f"render{i}", ScoreVector(tuple(float(v) for v in rng.uniform(2.0, 4.9, 4))))
        for i in range(4)
    ),
)
ranked = best_of_n(candidates, weights)
print("best-of-4 ranking:")
for cid, score in ranked:
    print(f"  {cid}: fused {score:.3f}  (unit scale {rescale_to_unit(score):.3f})")
print(f"winner: {ranked[0][0]}")

# --- group-relative advantages ---------------------------------------------
# One sampled group of eight outputs. Standardizing inside the group makes
# the advantages mean-zero / unit-std regardless of the reward scale.
group = RewardGroup("g0", tuple(float(r) for r in rng.uniform(1.0, 5.0, 8)))
adv = grpo_advantages(group)
print("\nrewards:   ", [f"{r:.2f}" for r in group.rewards])
print("advantages:", [f"{a:+.2f}" for a in adv])
print(f"mean {np.mean(adv):+.1e}, std {np.std(adv):.6f}")

# --- clipped surrogate ------------------------------------------------------
# Early in training the policy ratio hovers near 1 and the surrogate is just
# the mean advantage. A ratio pushed past 1+eps gets clipped.
some_adv = (0.8, -0.3, 0.4)
flat = GrpoStep(ratios=((1.0,), (1.0,), (1.0,)), advantages=some_adv)
print(f"\nsurrogate at ratio 1: {grpo_surrogate(flat):+.6f} "
      f"(= mean advantage {np.mean(some_adv):+.6f})")

eager = GrpoStep(ratios=((1.8,),), advantages=(1.0,), clip_eps=0.2)
print(f"ratio 1.8, advantage +1, eps 0.2 -> clipped to {grpo_surrogate(eager):.1f}")

# Reward bookkeeping over a training window.
print("\nwindow stats:", reward_stats([rescale_to_unit(s) for _, s in ranked]))
