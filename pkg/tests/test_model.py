"""Data model tests: enums, record validation, dataset checks."""

import math

import pytest

from mosaiq.model import (
    CANONICAL_DIMENSIONS,
    AnnotationRecord,
    Dimension,
    FusionWeights,
    MosRecord,
    PreferenceLabel,
    PreferencePair,
    RatingDistribution,
    RatingLevel,
    SchemaError,
    ScoreVector,
    validate_dataset,
)


class TestDimension:
    def test_canonical_order(self):
        assert [d.value for d in CANONICAL_DIMENSIONS] == [
            "layout",
            "harmony",
            "lighting",
            "distortion",
        ]
        assert [d.position for d in CANONICAL_DIMENSIONS] == [0, 1, 2, 3]

    def test_from_name_case_insensitive(self):
        assert Dimension.from_name("Layout") is Dimension.LAYOUT
        assert Dimension.from_name(" LIGHTING ") is Dimension.LIGHTING

    def test_from_name_unknown(self):
        with pytest.raises(SchemaError, match="unknown dimension"):
            Dimension.from_name("composition")


class TestRatingLevel:
    def test_word_value_bijection(self):
        assert [level.word for level in RatingLevel] == [
            "excellent",
            "good",
            "fair",
            "poor",
            "bad",
        ]
        assert [int(level) for level in RatingLevel] == [5, 4, 3, 2, 1]

    def test_from_word(self):
        assert RatingLevel.from_word("excellent") is RatingLevel.EXCELLENT
        assert RatingLevel.from_word(" Bad ") is RatingLevel.BAD
        with pytest.raises(SchemaError):
            RatingLevel.from_word("great")


class TestRatingDistribution:
    def test_valid(self):
        dist = RatingDistribution((0.2, 0.2, 0.2, 0.2, 0.2))
        assert math.isclose(sum(dist.probabilities), 1.0)
        assert dist.as_dict()["excellent"] == 0.2

    def test_sum_off(self):
        with pytest.raises(SchemaError, match="sum"):
            RatingDistribution((0.3, 0.3, 0.3, 0.3, 0.3))

    def test_negative(self):
        with pytest.raises(SchemaError):
            RatingDistribution((1.2, -0.2, 0.0, 0.0, 0.0))

    def test_wrong_length(self):
        with pytest.raises(SchemaError):
            RatingDistribution((0.5, 0.5))


class TestScoreVector:
    def test_indexing(self):
        vec = ScoreVector((1.0, 2.0, 3.0, 4.0))
        assert vec[Dimension.LAYOUT] == 1.0
        assert vec[Dimension.DISTORTION] == 4.0
        assert vec[2] == 3.0
        assert vec.as_dict() == {"layout": 1.0, "harmony": 2.0, "lighting": 3.0, "distortion": 4.0}

    def test_out_of_range(self):
        with pytest.raises(SchemaError, match="outside"):
            ScoreVector((0.5, 2.0, 3.0, 4.0))
        with pytest.raises(SchemaError):
            ScoreVector((1.0, 2.0, 3.0, 5.5))

    def test_from_mapping_missing(self):
        with pytest.raises(SchemaError, match="lighting"):
            ScoreVector.from_mapping({"layout": 3, "harmony": 3, "distortion": 3})

    def test_from_mapping_mixed_keys(self):
        vec = ScoreVector.from_mapping(
            {Dimension.LAYOUT: 1, "harmony": 2, "lighting": 3, Dimension.DISTORTION: 4}
        )
        assert vec.values == (1.0, 2.0, 3.0, 4.0)


class TestPreferencePair:
    def test_self_pair_rejected(self):
        vec = ScoreVector((3.0, 3.0, 3.0, 3.0))
        with pytest.raises(SchemaError, match="itself"):
            PreferencePair("p1", "img1", "img1", vec, vec, PreferenceLabel.TIE)

    def test_round_trip(self):
        vec_a = ScoreVector((3.0, 3.5, 4.0, 2.0))
        vec_b = ScoreVector((2.0, 3.0, 4.5, 2.5))
        pair = PreferencePair("p1", "a", "b", vec_a, vec_b, PreferenceLabel.A, "ann1")
        again = PreferencePair.from_dict(pair.to_dict())
        assert again == pair

    def test_label_from_string(self):
        assert PreferenceLabel.from_string("tie") is PreferenceLabel.TIE
        assert PreferenceLabel.from_string("A") is PreferenceLabel.A
        with pytest.raises(SchemaError):
            PreferenceLabel.from_string("draw")


class TestFusionWeights:
    def test_normalized_view(self):
        w = FusionWeights((0.2, 0.2, 0.2, 0.4))
        view = w.normalized_view
        assert math.isclose(sum(view), 1.0, abs_tol=1e-9)
        assert math.isclose(view[3], 0.4, rel_tol=1e-12)

    def test_zero_sum_has_no_view(self):
        assert FusionWeights((1.0, -1.0, 2.0, -2.0)).normalized_view is None

    def test_non_finite_rejected(self):
        with pytest.raises(SchemaError):
            FusionWeights((float("nan"), 0.0, 0.0, 0.0))


class TestMosRecord:
    def test_bounds(self):
        rec = MosRecord("img1", Dimension.LAYOUT, 4.4, 5)
        assert rec.outlier_count == 0
        with pytest.raises(SchemaError):
            MosRecord("img1", Dimension.LAYOUT, 5.5, 5)
        with pytest.raises(SchemaError):
            MosRecord("img1", Dimension.LAYOUT, 3.0, 0)
        with pytest.raises(SchemaError):
            MosRecord("img1", Dimension.LAYOUT, 3.0, 2, outlier_count=3)


def _record(image, dim, annotator, score):
    return AnnotationRecord(image, dim, annotator, score, batch_id="b1")


class TestValidateDataset:
    def test_clean_dataset(self):
        records = [
            _record("img1", Dimension.LAYOUT, f"r{i}", 3 + (i % 2)) for i in range(5)
        ]
        report = validate_dataset(records)
        assert report.ok
        assert report.counts_by_dimension[Dimension.LAYOUT] == 5
        assert report.counts_by_dimension[Dimension.HARMONY] == 0

    def test_out_of_range_flagged(self):
        records = [
            _record("img1", Dimension.LAYOUT, "r1", 6),
            _record("img1", Dimension.LAYOUT, "r2", 3),
            _record("img2", Dimension.HARMONY, "r1", 2.5),
        ]
        report = validate_dataset(records)
        assert not report.ok
        assert len(report.out_of_range) == 2
        flagged_scores = {entry[3] for entry in report.out_of_range}
        assert flagged_scores == {6, 2.5}

    def test_duplicates_flagged_once(self):
        records = [
            _record("img1", Dimension.LAYOUT, "r1", 3),
            _record("img1", Dimension.LAYOUT, "r1", 4),
            _record("img1", Dimension.LAYOUT, "r1", 5),
        ]
        report = validate_dataset(records)
        assert report.duplicates == (("img1", Dimension.LAYOUT, "r1"),)

    def test_report_serializes(self):
        report = validate_dataset([_record("img1", Dimension.LAYOUT, "r1", 6)])
        as_dict = report.to_dict()
        assert as_dict["ok"] is False
        assert as_dict["out_of_range"][0]["score"] == 6
