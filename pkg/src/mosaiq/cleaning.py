"""Annotation cleaning pipeline.

Order of operations mirrors the collection workflow: batches are
audited against gold labels, raw scores are aggregated into MOS,
raters are screened by rank correlation against MOS, outliers are
replaced by their group mean and the MOS recomputed, and the cleaned
MOS table is split into stratified train/test partitions.
"""

from __future__ import annotations

import dataclasses
import math
import zlib
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .metrics import srcc
from .model import AnnotationRecord, Dimension, MosRecord


@dataclass(frozen=True)
class CleaningConfig:
    """Knobs for the cleaning pipeline. Defaults match the collection protocol."""

    srcc_min: float = 0.6          # raters below this rank correlation are flagged
    z_max: float = 2.0             # |z| strictly above this marks an outlier
    audit_fraction: float = 0.10   # fraction of each batch sampled for audit
    audit_accuracy_min: float = 0.85
    split_ratio: tuple[int, int] = (4, 1)  # train : test parts
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if not (-1.0 <= self.srcc_min <= 1.0):
            raise ValueError(f"srcc_min must be in [-1, 1], got {self.srcc_min}")
        if self.z_max <= 0:
            raise ValueError(f"z_max must be > 0, got {self.z_max}")
        if not (0.0 < self.audit_fraction <= 1.0):
            raise ValueError(f"audit_fraction must be in (0, 1], got {self.audit_fraction}")
        if not (0.0 <= self.audit_accuracy_min <= 1.0):
            raise ValueError(
                f"audit_accuracy_min must be in [0, 1], got {self.audit_accuracy_min}"
            )
        train, test = self.split_ratio
        if train < 1 or test < 1:
            raise ValueError(f"split_ratio parts must be >= 1, got {self.split_ratio}")


@dataclass(frozen=True)
class RaterReport:
    """Reliability of one rater, per dimension or overall (dimension=None)."""

    annotator_id: str
    dimension: Dimension | None
    srcc_vs_mos: float | None
    n_common: int
    flagged: bool

    def to_dict(self) -> dict:
        return {
            "annotator_id": self.annotator_id,
            "dimension": None if self.dimension is None else self.dimension.value,
            "srcc_vs_mos": self.srcc_vs_mos,
            "n_common": self.n_common,
            "flagged": self.flagged,
        }


@dataclass(frozen=True)
class BatchAuditResult:
    """Audit outcome for one annotation batch."""

    batch_id: str
    batch_size: int
    sampled_count: int
    matches: int
    accuracy: float
    accepted: bool

    def to_dict(self) -> dict:
        return {
            "batch_id": self.batch_id,
            "batch_size": self.batch_size,
            "sampled_count": self.sampled_count,
            "matches": self.matches,
            "accuracy": self.accuracy,
            "accepted": self.accepted,
        }


def _group_by_item(
    records: Sequence[AnnotationRecord],
) -> dict[tuple[str, Dimension], list[int]]:
    """Group record indices by (image_id, dimension), keys sorted."""
    groups: dict[tuple[str, Dimension], list[int]] = {}
    for i, rec in enumerate(records):
        groups.setdefault((rec.image_id, rec.dimension), []).append(i)
    return dict(sorted(groups.items(), key=lambda kv: (kv[0][0], kv[0][1].position)))


def _mean(values: Sequence[float]) -> float:
    return math.fsum(values) / len(values)


def _population_std(values: Sequence[float], mean: float) -> float:
    return math.sqrt(math.fsum((v - mean) ** 2 for v in values) / len(values))


def aggregate_mos(records: Sequence[AnnotationRecord]) -> list[MosRecord]:
    """Mean opinion score per (image_id, dimension) group.

    The MOS is the plain arithmetic mean of that group's scores. Output
    is sorted by (image_id, dimension); an empty input yields an empty
    list (groups themselves are never empty).
    """
    out: list[MosRecord] = []
    for (image_id, dim), idxs in _group_by_item(records).items():
        scores = [records[i].score for i in idxs]
        out.append(
            MosRecord(
                image_id=image_id,
                dimension=dim,
                mos=_mean(scores),
                n_ratings=len(scores),
                outlier_count=0,
            )
        )
    return out


def mitigate_outliers(
    records: Sequence[AnnotationRecord],
    config: CleaningConfig | None = None,
) -> tuple[list[AnnotationRecord], list[MosRecord]]:
    """Replace outlier scores by their group mean and recompute MOS.

    Single pass per (image_id, dimension) group: z-scores use the
    original group's mean and population standard deviation, a score is
    an outlier iff |z| > z_max strictly (|z| exactly at the limit is
    kept), and each outlier is replaced by the pre-replacement group
    mean (outliers included). The MOS is then recomputed over the
    replaced values. A zero-spread group is returned untouched.

    Returns the cleaned records (input order preserved) and the
    recomputed MOS table sorted by (image_id, dimension), with
    outlier_count per group.
    """
    cfg = config or CleaningConfig()
    new_scores: dict[int, float] = {}
    mos_out: list[MosRecord] = []

    for (image_id, dim), idxs in _group_by_item(records).items():
        scores = [float(records[i].score) for i in idxs]
        mu = _mean(scores)
        sigma = _population_std(scores, mu)
        outliers = 0
        cleaned = scores
        if sigma > 0.0:
            cleaned = []
            for v in scores:
                z = (v - mu) / sigma
                if abs(z) > cfg.z_max:
                    cleaned.append(mu)
                    outliers += 1
                else:
                    cleaned.append(v)
        for i, v in zip(idxs, cleaned):
            if v != records[i].score:
                new_scores[i] = v
        mos_out.append(
            MosRecord(
                image_id=image_id,
                dimension=dim,
                mos=_mean(cleaned),
                n_ratings=len(cleaned),
                outlier_count=outliers,
            )
        )

    cleaned_records = [
        dataclasses.replace(rec, score=new_scores[i]) if i in new_scores else rec
        for i, rec in enumerate(records)
    ]
    return cleaned_records, mos_out


def rater_reliability(
    records: Sequence[AnnotationRecord],
    mos_records: Sequence[MosRecord],
    config: CleaningConfig | None = None,
) -> list[RaterReport]:
    """Rank correlation of each rater's scores against the MOS.

    Emits one report per (annotator, dimension) plus an overall roll-up
    per annotator (dimension=None) pooling all their ratings. A rater
    is flagged when their SRCC is defined and below srcc_min. With
    fewer than two common items, or constant scores on either side,
    the SRCC is undefined: srcc_vs_mos is None and flagged is False.
    """
    cfg = config or CleaningConfig()
    mos_by_key = {(m.image_id, m.dimension): m.mos for m in mos_records}

    by_rater_dim: dict[tuple[str, Dimension], list[tuple[str, float, float]]] = {}
    for rec in records:
        key = (rec.image_id, rec.dimension)
        if key not in mos_by_key:
            continue
        by_rater_dim.setdefault((rec.annotator_id, rec.dimension), []).append(
            (rec.image_id, float(rec.score), mos_by_key[key])
        )

    def build(annotator: str, dim: Dimension | None, items: list) -> RaterReport:
        items = sorted(items)
        scores = [s for (_, s, _) in items]
        mos = [m for (_, _, m) in items]
        value: float | None
        if len(items) < 2:
            value = None
        else:
            try:
                value = srcc(scores, mos)
            except ValueError:
                value = None  # constant scores, correlation undefined
        flagged = value is not None and value < cfg.srcc_min
        return RaterReport(
            annotator_id=annotator,
            dimension=dim,
            srcc_vs_mos=value,
            n_common=len(items),
            flagged=flagged,
        )

    reports: list[RaterReport] = []
    annotators = sorted({a for (a, _) in by_rater_dim})
    for annotator in annotators:
        pooled: list[tuple[tuple, float, float]] = []
        for dim in Dimension:
            items = by_rater_dim.get((annotator, dim))
            if not items:
                continue
            reports.append(build(annotator, dim, items))
            pooled.extend(((img, dim.position), s, m) for (img, s, m) in items)
        reports.append(build(annotator, None, pooled))
    return reports


def _batch_rng(seed: int, batch_id: str) -> np.random.Generator:
    # Stable per-batch stream: independent of dict order and PYTHONHASHSEED.
    return np.random.default_rng([seed, zlib.crc32(batch_id.encode("utf-8"))])


def audit_batches(
    records: Sequence[AnnotationRecord],
    gold: Mapping[tuple[str, Dimension], float],
    config: CleaningConfig | None = None,
) -> list[BatchAuditResult]:
    """Sample each batch and measure agreement with gold labels.

    Samples ceil(audit_fraction * batch_size) records per batch,
    without replacement, from the records whose (image_id, dimension)
    has a gold label. A record matches when its score equals the gold
    score. The batch is accepted when accuracy >= audit_accuracy_min.
    Raises ValueError when a batch lacks enough gold-labeled records
    to fill its sample.
    """
    cfg = config or CleaningConfig()
    batches: dict[str, list[AnnotationRecord]] = {}
    for rec in records:
        batches.setdefault(rec.batch_id, []).append(rec)

    results: list[BatchAuditResult] = []
    for batch_id in sorted(batches):
        batch = batches[batch_id]
        n_sample = math.ceil(cfg.audit_fraction * len(batch))
        eligible = sorted(
            (r for r in batch if (r.image_id, r.dimension) in gold),
            key=lambda r: (r.image_id, r.dimension.position, r.annotator_id),
        )
        if len(eligible) < n_sample:
            raise ValueError(
                f"batch {batch_id!r}: audit needs {n_sample} gold-labeled records, "
                f"found {len(eligible)}"
            )
        rng = _batch_rng(cfg.rng_seed, batch_id)
        picked = rng.choice(len(eligible), size=n_sample, replace=False)
        matches = sum(
            1
            for i in picked
            if eligible[i].score == gold[(eligible[i].image_id, eligible[i].dimension)]
        )
        accuracy = matches / n_sample
        results.append(
            BatchAuditResult(
                batch_id=batch_id,
                batch_size=len(batch),
                sampled_count=n_sample,
                matches=matches,
                accuracy=accuracy,
                accepted=accuracy >= cfg.audit_accuracy_min,
            )
        )
    return results


def _bucket(mos: float) -> int:
    # Nearest integer, halves round up: strata for MOS levels 1..5.
    return int(math.floor(mos + 0.5))


def split_train_test(
    mos_records: Sequence[MosRecord],
    config: CleaningConfig | None = None,
) -> tuple[list[MosRecord], list[MosRecord]]:
    """Stratified split of the MOS table into train and test.

    Within each dimension, records are bucketed by rounded MOS; each
    bucket is shuffled with a seed derived from (rng_seed, dimension,
    bucket) and split by split_ratio with the test count rounded to the
    nearest integer (so a bucket of 5 yields 4 train / 1 test at 4:1).
    Each dimension needs at least 5 records. Within a dimension no
    image appears on both sides; dimensions split independently.
    Outputs are sorted by (image_id, dimension).
    """
    cfg = config or CleaningConfig()
    train_parts, test_parts = cfg.split_ratio
    total_parts = train_parts + test_parts

    by_dim: dict[Dimension, list[MosRecord]] = {}
    for rec in mos_records:
        by_dim.setdefault(rec.dimension, []).append(rec)

    train: list[MosRecord] = []
    test: list[MosRecord] = []
    for dim in Dimension:
        if dim not in by_dim:
            continue
        dim_records = by_dim[dim]
        if len(dim_records) < 5:
            raise ValueError(
                f"{dim.value}: need at least 5 records to split, got {len(dim_records)}"
            )
        buckets: dict[int, list[MosRecord]] = {}
        for rec in dim_records:
            buckets.setdefault(_bucket(rec.mos), []).append(rec)
        for bucket in sorted(buckets):
            items = sorted(buckets[bucket], key=lambda r: r.image_id)
            rng = np.random.default_rng([cfg.rng_seed, dim.position, bucket])
            order = rng.permutation(len(items))
            n_test = int(math.floor(len(items) * test_parts / total_parts + 0.5))
            test.extend(items[i] for i in order[:n_test])
            train.extend(items[i] for i in order[n_test:])

    sort_key = lambda r: (r.image_id, r.dimension.position)
    return sorted(train, key=sort_key), sorted(test, key=sort_key)
