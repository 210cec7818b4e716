"""Agreement metrics and pairwise ranking evaluation.

PLCC is the raw Pearson correlation (no nonlinear remapping; reports
carry a "plcc_mapping": "raw" marker). SRCC is Pearson correlation on
average ranks, which equals the classic 1 - 6*sum(d^2)/(n*(n^2-1))
formula when there are no ties. Rank accuracy scores a fused metric
against pairwise preference labels with a tie threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.stats import rankdata

from .model import (
    CANONICAL_DIMENSIONS,
    Dimension,
    MosRecord,
    PreferenceLabel,
    PreferencePair,
)

PLCC_MAPPING = "raw"  # no logistic or polynomial remap is applied before PLCC


@dataclass(frozen=True)
class MetricReport:
    """Correlation metrics for one dimension (or the pooled overall row)."""

    label: str
    plcc: float
    srcc: float
    n: int

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "plcc": self.plcc,
            "srcc": self.srcc,
            "n": self.n,
            "plcc_mapping": PLCC_MAPPING,
        }


@dataclass(frozen=True)
class RankEvalResult:
    """Rank accuracy of one scoring method at one tie threshold."""

    method: str
    threshold: float
    rank_accuracy: float
    n_pairs: int

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "threshold": self.threshold,
            "rank_accuracy": self.rank_accuracy,
            "n_pairs": self.n_pairs,
        }


def _paired_arrays(predictions, targets) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(predictions, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1:
        raise ValueError("predictions and targets must be one-dimensional")
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.shape[0]} predictions vs {y.shape[0]} targets")
    if x.shape[0] < 2:
        raise ValueError("need at least 2 points for a correlation")
    if not (np.isfinite(x).all() and np.isfinite(y).all()):
        raise ValueError("predictions and targets must be finite")
    return x, y


def plcc(predictions, targets) -> float:
    """Pearson linear correlation coefficient of two equal-length vectors.

    Raises ValueError on constant input, where the correlation is
    undefined, rather than returning NaN.
    """
    x, y = _paired_arrays(predictions, targets)
    xc = x - x.mean()
    yc = y - y.mean()
    sxx = float(np.dot(xc, xc))
    syy = float(np.dot(yc, yc))
    if sxx == 0.0 or syy == 0.0:
        raise ValueError("undefined correlation: input vector is constant")
    # single sqrt of the product: exact when sxx*syy is a perfect square,
    # as it is for tie-free integer ranks
    return float(np.dot(xc, yc) / math.sqrt(sxx * syy))


def srcc(predictions, targets) -> float:
    """Spearman rank correlation: Pearson correlation on average ranks.

    Ties receive average ranks. Without ties this equals
    1 - 6*sum(d_i^2)/(n*(n^2-1)). Constant input raises ValueError.
    """
    x, y = _paired_arrays(predictions, targets)
    return plcc(rankdata(x), rankdata(y))


# Integer encoding for vectorized label comparison.
_LABEL_CODE = {PreferenceLabel.A: 0, PreferenceLabel.B: 1, PreferenceLabel.TIE: 2}


def _encode_pairs(
    pairs: Sequence[PreferencePair], fused_scores: Mapping[str, float]
) -> tuple[np.ndarray, np.ndarray]:
    if not pairs:
        raise ValueError("need at least one preference pair")
    diffs = np.empty(len(pairs), dtype=np.float64)
    labels = np.empty(len(pairs), dtype=np.int64)
    for i, pair in enumerate(pairs):
        try:
            sa = fused_scores[pair.image_a_id]
            sb = fused_scores[pair.image_b_id]
        except KeyError as exc:
            raise ValueError(
                f"pair {pair.pair_id!r}: no fused score for image {exc.args[0]!r}"
            ) from None
        diffs[i] = sa - sb
        labels[i] = _LABEL_CODE[pair.label]
    if not np.isfinite(diffs).all():
        raise ValueError("fused scores must be finite")
    return diffs, labels


def _accuracy_at(diffs: np.ndarray, labels: np.ndarray, threshold: float) -> float:
    # A zero difference predicts Tie even at threshold 0.
    tie = (np.abs(diffs) < threshold) | (diffs == 0.0)
    pred = np.where(tie, 2, np.where(diffs > 0.0, 0, 1))
    return float(np.mean(pred == labels))


def rank_accuracy(
    pairs: Sequence[PreferencePair],
    fused_scores: Mapping[str, float],
    threshold: float,
) -> float:
    """Fraction of pairs whose predicted outcome matches the label.

    Predicts Tie when |score_a - score_b| < threshold (strict) or the
    difference is exactly zero; otherwise the higher-scored image wins.
    """
    if threshold < 0:
        raise ValueError(f"threshold must be >= 0, got {threshold}")
    diffs, labels = _encode_pairs(pairs, fused_scores)
    return _accuracy_at(diffs, labels, threshold)


def threshold_grid(lo: float = 0.0, hi: float = 4.0, step: float = 0.005) -> list[float]:
    """The contractual search grid: round(lo + k*step, 9) for each k.

    Rounding to 9 decimals keeps grid points on their nominal decimal
    values instead of accumulating float error (naive lo + 60*0.005
    yields 0.30000000000000004, which is not the nominal 0.3).
    """
    if step <= 0:
        raise ValueError(f"step must be > 0, got {step}")
    if hi < lo:
        raise ValueError(f"hi {hi} must be >= lo {lo}")
    n_steps = int(math.floor((hi - lo) / step + 1e-9))
    return [round(lo + k * step, 9) for k in range(n_steps + 1)]


def optimize_threshold(
    pairs: Sequence[PreferencePair],
    fused_scores: Mapping[str, float],
    lo: float = 0.0,
    hi: float = 4.0,
    step: float = 0.005,
    method: str = "fused",
) -> RankEvalResult:
    """Exhaustive grid search for the tie threshold maximizing accuracy.

    Scans the grid from threshold_grid(lo, hi, step) in ascending order
    and keeps the first maximizer, so ties resolve to the smallest
    threshold.
    """
    diffs, labels = _encode_pairs(pairs, fused_scores)
    best_thr = None
    best_acc = -1.0
    for thr in threshold_grid(lo, hi, step):
        acc = _accuracy_at(diffs, labels, thr)
        if acc > best_acc:
            best_acc = acc
            best_thr = thr
    return RankEvalResult(
        method=method,
        threshold=best_thr,
        rank_accuracy=best_acc,
        n_pairs=len(pairs),
    )


def benchmark_report(
    predictions: Mapping[Dimension, Mapping[str, float]],
    mos_records: Sequence[MosRecord],
) -> list[MetricReport]:
    """PLCC/SRCC per dimension plus a pooled overall row.

    predictions maps dimension -> {image_id: predicted score}. Every
    predicted image must have a MOS record for that dimension;
    unmatched ids raise ValueError listing them.
    """
    mos_by_key = {(m.image_id, m.dimension): m.mos for m in mos_records}
    reports: list[MetricReport] = []
    pooled_pred: list[float] = []
    pooled_mos: list[float] = []

    for dim in CANONICAL_DIMENSIONS:
        if dim not in predictions:
            continue
        per_image = predictions[dim]
        missing = sorted(i for i in per_image if (i, dim) not in mos_by_key)
        if missing:
            raise ValueError(
                f"{dim.value}: no MOS for predicted image(s): {', '.join(missing)}"
            )
        image_ids = sorted(per_image)
        pred = [float(per_image[i]) for i in image_ids]
        target = [mos_by_key[(i, dim)] for i in image_ids]
        reports.append(
            MetricReport(
                label=dim.value,
                plcc=plcc(pred, target),
                srcc=srcc(pred, target),
                n=len(pred),
            )
        )
        pooled_pred.extend(pred)
        pooled_mos.extend(target)

    if not reports:
        raise ValueError("no dimensions with predictions")
    reports.append(
        MetricReport(
            label="overall",
            plcc=plcc(pooled_pred, pooled_mos),
            srcc=srcc(pooled_pred, pooled_mos),
            n=len(pooled_pred),
        )
    )
    return reports


def render_metric_table(rows: Mapping[str, Sequence[MetricReport]]) -> str:
    """Fixed-width table of "PLCC / SRCC" cells, three decimals.

    rows maps a method name to its benchmark_report output. Columns are
    the four dimensions plus Overall; missing cells render as "-".
    """
    columns = [d.value for d in CANONICAL_DIMENSIONS] + ["overall"]
    header = ["method"] + [c.capitalize() for c in columns]
    table = [header]
    for method, reports in rows.items():
        by_label = {r.label: r for r in reports}
        line = [method]
        for col in columns:
            rep = by_label.get(col)
            line.append("-" if rep is None else f"{rep.plcc:.3f} / {rep.srcc:.3f}")
        table.append(line)

    widths = [max(len(row[i]) for row in table) for i in range(len(header))]
    out = []
    for row in table:
        out.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
    return "\n".join(out)
