"""
Cleaning a raw annotation table
===============================

Walks the whole intake pipeline on a small synthetic table: outlier
mitigation, MOS aggregation, rater reliability, batch audits, and the
stratified train/test split.
"""

import numpy as np

from mosaiq.cleaning import (
    CleaningConfig,
    audit_batches,
    mitigate_outliers,
    rater_reliability,
    split_train_test,
)
from mosaiq.model import AnnotationRecord, Dimension

rng = np.random.default_rng(7)

# Fabricate ratings for 12 images on two dimensions. Six raters mostly
# agree; "r5" occasionally fat-fingers a 1 where everyone else saw a 5.
records = []
gold = {}
for k in range(12):
    for dim in (Dimension.LAYOUT, Dimension.LIGHTING):
        base = int(rng.integers(2, 5))
        gold[(f"img{k:02d}", dim)] = float(base)
        fumbled = k % 5 == 0 and dim is Dimension.LAYOUT
        for rater in ("r1", "r2", "r3", "r4", "r5", "r6"):
            if fumbled:
                score = 1 if rater == "r5" else 5
            else:
                score = min(base + int(rng.integers(0, 2)), 5)
            records.append(
                AnnotationRecord(
                    f"img{k:02d}", dim, rater, score, batch_id="demo-sloppy"
                )
            )

# A second batch collected later, after the raters read the guidelines:
# everyone lands exactly on the reference score.
for k in range(12, 20):
    for dim in (Dimension.LAYOUT, Dimension.LIGHTING):
        base = int(rng.integers(2, 5))
        gold[(f"img{k:02d}", dim)] = float(base)
        for rater in ("r1", "r2", "r3", "r4"):
            records.append(
                AnnotationRecord(f"img{k:02d}", dim, rater, base, batch_id="demo-careful")
            )

print(f"raw table: {len(records)} ratings over 40 (image, dimension) groups")

# Step 1: z-score mitigation. A score whose |z| exceeds 2 within its group
# is replaced by the group mean, then the MOS is recomputed.
cleaned, mos = mitigate_outliers(records)
touched = [m for m in mos if m.outlier_count]
print(f"outlier pass: {sum(m.outlier_count for m in mos)} scores replaced "
      f"in {len(touched)} groups")
for m in touched[:3]:
    print(f"  {m.image_id}/{m.dimension.value}: mos={m.mos:.3f} "
          f"({m.outlier_count} replaced)")

# Step 2: who can we trust? Rank-correlate each rater against the MOS.
# The roll-up row (dimension=None) pools all dimensions.
reports = rater_reliability(records, mos)
for rep in reports:
    if rep.dimension is None:
        corr = "n/a" if rep.srcc_vs_mos is None else f"{rep.srcc_vs_mos:+.3f}"
        mark = "  <- flagged" if rep.flagged else ""
        print(f"rater {rep.annotator_id}: srcc {corr} over {rep.n_common} items{mark}")

# Step 3: audit each batch against the expert reference labels. The noisy
# first batch gets caught; the careful one sails through.
audits = audit_batches(records, gold, CleaningConfig(audit_fraction=0.3))
for a in audits:
    verdict = "accepted" if a.accepted else "REJECTED"
    print(f"audit {a.batch_id}: {a.sampled_count} sampled, "
          f"accuracy {a.accuracy:.2f} -> {verdict}")

# Step 4: stratified split. Buckets come from the rounded MOS so both
# sides of the split see the same score distribution. Stratification is
# per dimension, so disjointness holds within each dimension.
train, test = split_train_test(mos, CleaningConfig(rng_seed=3))
disjoint = all(
    not (
        {m.image_id for m in train if m.dimension is d}
        & {m.image_id for m in test if m.dimension is d}
    )
    for d in Dimension
)
print(f"split: {len(train)} train / {len(test)} test "
      f"(disjoint within each dimension: {disjoint})")
