"""Core data model: dimensions, rating scale, and record types.

Every image is assessed on four dimensions (layout, harmony, lighting,
distortion) using a five-level rating scale whose words map to fixed
numeric values (excellent=5, good=4, fair=3, poor=2, bad=1). The types
here are the shared vocabulary for the cleaning pipeline, the scorer,
the fusion fitter, and the service layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import Iterable, Mapping, Sequence


class SchemaError(ValueError):
    """A record or value violates the data model."""


class Dimension(Enum):
    """Assessment dimension. Definition order is the canonical order."""

    LAYOUT = "layout"
    HARMONY = "harmony"
    LIGHTING = "lighting"
    DISTORTION = "distortion"

    @classmethod
    def from_name(cls, name: str) -> "Dimension":
        try:
            return cls(name.strip().lower())
        except ValueError:
            valid = ", ".join(d.value for d in cls)
            raise SchemaError(f"unknown dimension {name!r} (expected one of: {valid})") from None

    @property
    def position(self) -> int:
        """Index of this dimension in the canonical order."""
        return CANONICAL_DIMENSIONS.index(self)


CANONICAL_DIMENSIONS: tuple[Dimension, ...] = tuple(Dimension)


class RatingLevel(IntEnum):
    """Five-level rating scale. The numeric value is the score value."""

    EXCELLENT = 5
    GOOD = 4
    FAIR = 3
    POOR = 2
    BAD = 1

    @property
    def word(self) -> str:
        return self.name.lower()

    @classmethod
    def from_word(cls, word: str) -> "RatingLevel":
        try:
            return cls[word.strip().upper()]
        except KeyError:
            valid = ", ".join(w for w in RATING_WORDS)
            raise SchemaError(f"unknown rating word {word!r} (expected one of: {valid})") from None


# Fixed presentation order for distributions and logit vectors: best to worst.
RATING_WORDS: tuple[str, ...] = tuple(level.word for level in RatingLevel)
RATING_VALUES: tuple[int, ...] = tuple(int(level) for level in RatingLevel)


@dataclass(frozen=True)
class AnnotationRecord:
    """One rater's score for one image on one dimension.

    Raw scores are integers in [1, 5]. Outlier mitigation may replace a
    score with a group mean, so the field type admits floats; use
    validate_dataset to check raw datasets.
    """

    image_id: str
    dimension: Dimension
    annotator_id: str
    score: float
    batch_id: str = ""

    def to_dict(self) -> dict:
        return {
            "image_id": self.image_id,
            "dimension": self.dimension.value,
            "annotator_id": self.annotator_id,
            "score": self.score,
            "batch_id": self.batch_id,
        }

    @classmethod
    def from_dict(cls, row: Mapping) -> "AnnotationRecord":
        try:
            score = row["score"]
            if not isinstance(score, (int, float)) or isinstance(score, bool):
                raise SchemaError(f"score must be numeric, got {score!r}")
            return cls(
                image_id=str(row["image_id"]),
                dimension=Dimension.from_name(str(row["dimension"])),
                annotator_id=str(row["annotator_id"]),
                score=score,
                batch_id=str(row.get("batch_id", "")),
            )
        except KeyError as exc:
            raise SchemaError(f"annotation record missing field {exc.args[0]!r}") from None


@dataclass(frozen=True)
class MosRecord:
    """Mean opinion score for one (image, dimension) group."""

    image_id: str
    dimension: Dimension
    mos: float
    n_ratings: int
    outlier_count: int = 0

    def __post_init__(self) -> None:
        if self.n_ratings < 1:
            raise SchemaError(f"n_ratings must be >= 1, got {self.n_ratings}")
        if not (0 <= self.outlier_count <= self.n_ratings):
            raise SchemaError(
                f"outlier_count {self.outlier_count} outside [0, {self.n_ratings}]"
            )
        if not (1.0 - 1e-9 <= self.mos <= 5.0 + 1e-9):
            raise SchemaError(f"mos {self.mos} outside [1, 5]")

    def to_dict(self) -> dict:
        return {
            "image_id": self.image_id,
            "dimension": self.dimension.value,
            "mos": self.mos,
            "n_ratings": self.n_ratings,
            "outlier_count": self.outlier_count,
        }

    @classmethod
    def from_dict(cls, row: Mapping) -> "MosRecord":
        try:
            return cls(
                image_id=str(row["image_id"]),
                dimension=Dimension.from_name(str(row["dimension"])),
                mos=float(row["mos"]),
                n_ratings=int(row["n_ratings"]),
                outlier_count=int(row.get("outlier_count", 0)),
            )
        except KeyError as exc:
            raise SchemaError(f"mos record missing field {exc.args[0]!r}") from None


@dataclass(frozen=True)
class RatingDistribution:
    """Probabilities over the five rating levels, ordered excellent to bad."""

    probabilities: tuple[float, float, float, float, float]

    def __post_init__(self) -> None:
        if len(self.probabilities) != 5:
            raise SchemaError(f"expected 5 probabilities, got {len(self.probabilities)}")
        for p in self.probabilities:
            if not math.isfinite(p) or p < 0.0:
                raise SchemaError(f"probabilities must be finite and >= 0, got {p!r}")
        total = math.fsum(self.probabilities)
        if abs(total - 1.0) > 1e-9:
            raise SchemaError(f"probabilities sum to {total!r}, expected 1 within 1e-9")

    def as_dict(self) -> dict[str, float]:
        return dict(zip(RATING_WORDS, self.probabilities))


@dataclass(frozen=True)
class ScoreVector:
    """Per-dimension scores for one image, in canonical dimension order."""

    values: tuple[float, float, float, float]

    def __post_init__(self) -> None:
        if len(self.values) != 4:
            raise SchemaError(f"expected 4 values, got {len(self.values)}")
        for v in self.values:
            if not math.isfinite(v) or not (1.0 - 1e-9 <= v <= 5.0 + 1e-9):
                raise SchemaError(f"score {v!r} outside [1, 5]")

    def __getitem__(self, key) -> float:
        if isinstance(key, Dimension):
            return self.values[key.position]
        return self.values[key]

    def as_dict(self) -> dict[str, float]:
        return {d.value: v for d, v in zip(CANONICAL_DIMENSIONS, self.values)}

    @classmethod
    def from_mapping(cls, scores: Mapping) -> "ScoreVector":
        """Build from a mapping keyed by Dimension or dimension name."""
        values = []
        missing = []
        for d in CANONICAL_DIMENSIONS:
            if d in scores:
                values.append(float(scores[d]))
            elif d.value in scores:
                values.append(float(scores[d.value]))
            else:
                missing.append(d.value)
        if missing:
            raise SchemaError(f"missing dimensions: {', '.join(missing)}")
        return cls(tuple(values))


class PreferenceLabel(Enum):
    """Outcome of a pairwise comparison between images A and B."""

    A = "A"
    B = "B"
    TIE = "Tie"

    @classmethod
    def from_string(cls, text: str) -> "PreferenceLabel":
        norm = text.strip().lower()
        for label in cls:
            if norm == label.value.lower():
                return label
        raise SchemaError(f"unknown preference label {text!r} (expected A, B, or Tie)")


@dataclass(frozen=True)
class PreferencePair:
    """A labeled pairwise comparison with both images' score vectors."""

    pair_id: str
    image_a_id: str
    image_b_id: str
    scores_a: ScoreVector
    scores_b: ScoreVector
    label: PreferenceLabel
    annotator_id: str = ""

    def __post_init__(self) -> None:
        if self.image_a_id == self.image_b_id:
            raise SchemaError(f"pair {self.pair_id!r} compares {self.image_a_id!r} to itself")

    def to_dict(self) -> dict:
        return {
            "pair_id": self.pair_id,
            "image_a_id": self.image_a_id,
            "image_b_id": self.image_b_id,
            "scores_a": list(self.scores_a.values),
            "scores_b": list(self.scores_b.values),
            "label": self.label.value,
            "annotator_id": self.annotator_id,
        }

    @classmethod
    def from_dict(cls, row: Mapping) -> "PreferencePair":
        try:
            return cls(
                pair_id=str(row["pair_id"]),
                image_a_id=str(row["image_a_id"]),
                image_b_id=str(row["image_b_id"]),
                scores_a=ScoreVector(tuple(float(v) for v in row["scores_a"])),
                scores_b=ScoreVector(tuple(float(v) for v in row["scores_b"])),
                label=PreferenceLabel.from_string(str(row["label"])),
                annotator_id=str(row.get("annotator_id", "")),
            )
        except KeyError as exc:
            raise SchemaError(f"preference pair missing field {exc.args[0]!r}") from None


@dataclass(frozen=True)
class FusionWeights:
    """Per-dimension fusion weights, in canonical dimension order."""

    w: tuple[float, float, float, float]

    def __post_init__(self) -> None:
        if len(self.w) != 4:
            raise SchemaError(f"expected 4 weights, got {len(self.w)}")
        for v in self.w:
            if not math.isfinite(v):
                raise SchemaError(f"weights must be finite, got {v!r}")

    @property
    def normalized_view(self) -> tuple[float, float, float, float] | None:
        """Weights rescaled to sum to 1, or None when the sum is zero."""
        total = math.fsum(self.w)
        if total == 0.0:
            return None
        return tuple(v / total for v in self.w)

    def as_dict(self) -> dict:
        view = self.normalized_view
        return {
            "w": list(self.w),
            "normalized_view": None if view is None else list(view),
        }

    @classmethod
    def from_dict(cls, row: Mapping) -> "FusionWeights":
        try:
            return cls(tuple(float(v) for v in row["w"]))
        except KeyError:
            raise SchemaError("fusion weights missing field 'w'") from None


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of validate_dataset. Report only; nothing is modified."""

    counts_by_dimension: dict[Dimension, int] = field(default_factory=dict)
    duplicates: tuple[tuple[str, Dimension, str], ...] = ()
    out_of_range: tuple[tuple[str, Dimension, str, float], ...] = ()

    @property
    def ok(self) -> bool:
        return not self.duplicates and not self.out_of_range

    def to_dict(self) -> dict:
        return {
            "counts_by_dimension": {d.value: n for d, n in self.counts_by_dimension.items()},
            "duplicates": [
                {"image_id": i, "dimension": d.value, "annotator_id": a}
                for (i, d, a) in self.duplicates
            ],
            "out_of_range": [
                {"image_id": i, "dimension": d.value, "annotator_id": a, "score": s}
                for (i, d, a, s) in self.out_of_range
            ],
            "ok": self.ok,
        }


def _is_valid_raw_score(score: float) -> bool:
    # Raw ratings are the five integer levels; anything else is out of range.
    return (
        isinstance(score, (int, float))
        and not isinstance(score, bool)
        and math.isfinite(score)
        and float(score).is_integer()
        and 1 <= score <= 5
    )


def validate_dataset(records: Iterable[AnnotationRecord]) -> ValidationReport:
    """Check a raw annotation dataset and report every violation.

    Flags duplicate (image_id, dimension, annotator_id) keys and scores
    that are not one of the five integer rating levels. Returns counts
    per dimension for all four canonical dimensions.
    """
    counts = {d: 0 for d in CANONICAL_DIMENSIONS}
    seen: set[tuple[str, Dimension, str]] = set()
    duplicates: list[tuple[str, Dimension, str]] = []
    dup_reported: set[tuple[str, Dimension, str]] = set()
    out_of_range: list[tuple[str, Dimension, str, float]] = []

    for rec in records:
        counts[rec.dimension] += 1
        key = (rec.image_id, rec.dimension, rec.annotator_id)
        if key in seen and key not in dup_reported:
            duplicates.append(key)
            dup_reported.add(key)
        seen.add(key)
        if not _is_valid_raw_score(rec.score):
            out_of_range.append((rec.image_id, rec.dimension, rec.annotator_id, rec.score))

    duplicates.sort(key=lambda k: (k[0], k[1].position, k[2]))
    out_of_range.sort(key=lambda k: (k[0], k[1].position, k[2]))
    return ValidationReport(
        counts_by_dimension=counts,
        duplicates=tuple(duplicates),
        out_of_range=tuple(out_of_range),
    )
