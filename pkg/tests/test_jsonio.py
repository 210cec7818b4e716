"""File-format tests: jsonl round trips, error reporting, weights file."""

import json

import pytest

from mosaiq.fusion import FitConfig, fit_weights
from mosaiq.jsonio import (
    ParseError,
    iter_jsonl,
    read_annotations,
    read_candidate_sets,
    read_gold,
    read_logit_records,
    read_mos_records,
    read_preference_pairs,
    read_score_rows,
    read_weights,
    scores_by_dimension,
    write_annotations,
    write_bon_results,
    write_candidate_rows,
    write_jsonl,
    write_logit_records,
    write_mos_records,
    write_preference_pairs,
    write_score_rows,
    write_weights,
)
from mosaiq.model import (
    AnnotationRecord,
    Dimension,
    MosRecord,
    PreferenceLabel,
    PreferencePair,
    ScoreVector,
)
from mosaiq.scoring import LogitRecord


class TestIterJsonl:
    def test_skips_blank_lines(self, tmp_path):
        path = tmp_path / "rows.jsonl"
        path.write_text('{"a": 1}\n\n   \n{"b": 2}\n')
        rows = list(iter_jsonl(path))
        assert rows == [(1, {"a": 1}), (4, {"b": 2})]

    def test_bad_json_names_line(self, tmp_path):
        path = tmp_path / "rows.jsonl"
        path.write_text('{"a": 1}\nnot json\n')
        with pytest.raises(ParseError) as excinfo:
            list(iter_jsonl(path))
        assert excinfo.value.lineno == 2
        assert str(path) in str(excinfo.value)

    def test_non_object_rejected(self, tmp_path):
        path = tmp_path / "rows.jsonl"
        path.write_text("[1, 2, 3]\n")
        with pytest.raises(ParseError, match="expected a JSON object"):
            list(iter_jsonl(path))

    def test_write_then_read(self, tmp_path):
        path = tmp_path / "rows.jsonl"
        write_jsonl(path, [{"k": "v"}, {"n": 1.5}])
        assert [obj for _, obj in iter_jsonl(path)] == [{"k": "v"}, {"n": 1.5}]


class TestAnnotations:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "ann.jsonl"
        records = [
            AnnotationRecord("img1", Dimension.LAYOUT, "r1", 4, "b1"),
            AnnotationRecord("img2", Dimension.DISTORTION, "r2", 2.5, ""),
        ]
        write_annotations(path, records)
        assert read_annotations(path) == records

    def test_missing_field_reported_with_line(self, tmp_path):
        path = tmp_path / "ann.jsonl"
        good = AnnotationRecord("img1", Dimension.LAYOUT, "r1", 4).to_dict()
        bad = {"image_id": "img2", "dimension": "layout", "score": 3}
        write_jsonl(path, [good, bad])
        with pytest.raises(ParseError, match="annotator_id") as excinfo:
            read_annotations(path)
        assert excinfo.value.lineno == 2

    def test_unknown_dimension_reported(self, tmp_path):
        path = tmp_path / "ann.jsonl"
        write_jsonl(
            path,
            [{"image_id": "i", "dimension": "vibe", "annotator_id": "r", "score": 3}],
        )
        with pytest.raises(ParseError, match="unknown dimension 'vibe'"):
            read_annotations(path)


class TestMosRecords:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "mos.jsonl"
        records = [
            MosRecord("img1", Dimension.HARMONY, 3.25, 4, 1),
            MosRecord("img2", Dimension.LAYOUT, 5.0, 2, 0),
        ]
        write_mos_records(path, records)
        assert read_mos_records(path) == records

    def test_out_of_range_mos_rejected(self, tmp_path):
        path = tmp_path / "mos.jsonl"
        write_jsonl(
            path, [{"image_id": "i", "dimension": "layout", "mos": 9.0, "n_ratings": 3}]
        )
        with pytest.raises(ParseError, match="outside"):
            read_mos_records(path)


class TestLogitRecords:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "logits.jsonl"
        records = [
            LogitRecord("img1", Dimension.LAYOUT, (2.0, 1.0, 0.5, -1.0, -2.0), "m1"),
            LogitRecord("img1", Dimension.HARMONY, (0.0, 0.0, 0.0, 0.0, 0.0), ""),
        ]
        write_logit_records(path, records)
        assert read_logit_records(path) == records

    def test_wrong_arity_rejected(self, tmp_path):
        path = tmp_path / "logits.jsonl"
        write_jsonl(
            path,
            [{"image_id": "i", "dimension": "layout", "logits": [1.0, 2.0]}],
        )
        with pytest.raises(ParseError):
            read_logit_records(path)


class TestScoreRows:
    def test_round_trip_and_regroup(self, tmp_path):
        path = tmp_path / "scores.jsonl"
        rows = [
            ("img1", Dimension.LAYOUT, 3.5),
            ("img1", Dimension.HARMONY, 4.0),
            ("img2", Dimension.LAYOUT, 2.0),
        ]
        write_score_rows(path, rows)
        assert read_score_rows(path) == rows
        grouped = scores_by_dimension(rows)
        assert grouped[Dimension.LAYOUT] == {"img1": 3.5, "img2": 2.0}
        assert grouped[Dimension.HARMONY] == {"img1": 4.0}

    def test_missing_field_is_parse_error(self, tmp_path):
        path = tmp_path / "scores.jsonl"
        write_jsonl(path, [{"dimension": "layout", "score": 3.0}])
        with pytest.raises(ParseError, match="missing field 'image_id'"):
            read_score_rows(path)

    def test_gold_mapping_keyed_by_image_and_dimension(self, tmp_path):
        path = tmp_path / "gold.jsonl"
        write_score_rows(
            path, [("img1", Dimension.LAYOUT, 4.0), ("img1", Dimension.LIGHTING, 2.0)]
        )
        gold = read_gold(path)
        assert gold == {
            ("img1", Dimension.LAYOUT): 4.0,
            ("img1", Dimension.LIGHTING): 2.0,
        }


class TestPreferencePairs:
    def _pair(self):
        return PreferencePair(
            "p1",
            "imgA",
            "imgB",
            ScoreVector((1.0, 2.0, 3.0, 4.0)),
            ScoreVector((4.0, 3.0, 2.0, 1.0)),
            PreferenceLabel.TIE,
            "r1",
        )

    def test_round_trip(self, tmp_path):
        path = tmp_path / "pairs.jsonl"
        write_preference_pairs(path, [self._pair()])
        [back] = read_preference_pairs(path)
        assert back == self._pair()

    def test_bad_label_reported(self, tmp_path):
        path = tmp_path / "pairs.jsonl"
        row = self._pair().to_dict()
        row["label"] = "C"
        write_jsonl(path, [row])
        with pytest.raises(ParseError, match="unknown preference label"):
            read_preference_pairs(path)


class TestWeightsFile:
    def _fit(self):
        pairs = [
            PreferencePair(
                "p1",
                "a",
                "b",
                ScoreVector((4.0, 3.0, 3.0, 3.0)),
                ScoreVector((3.0, 3.0, 3.0, 3.0)),
                PreferenceLabel.A,
            )
        ]
        return fit_weights(pairs, FitConfig(max_iters=20))

    def test_round_trip_with_meta(self, tmp_path):
        path = tmp_path / "weights.json"
        result = self._fit()
        write_weights(path, result)
        weights, meta = read_weights(path)
        assert weights == result.weights
        assert meta["pair_count_used"] == 1
        assert meta["tie_mode"] == "soft_half"

    def test_file_is_indented_json_with_trailing_newline(self, tmp_path):
        path = tmp_path / "weights.json"
        write_weights(path, self._fit())
        text = path.read_text()
        assert text.endswith("\n")
        assert json.loads(text)["w"] is not None
        assert text.startswith("{\n")

    def test_weights_without_meta(self, tmp_path):
        path = tmp_path / "weights.json"
        path.write_text('{"w": [0.1, 0.2, 0.3, 0.4]}\n')
        weights, meta = read_weights(path)
        assert weights.w == (0.1, 0.2, 0.3, 0.4)
        assert meta == {}

    def test_missing_w_rejected(self, tmp_path):
        path = tmp_path / "weights.json"
        path.write_text('{"weights": [1, 2, 3, 4]}\n')
        with pytest.raises(ParseError, match="missing field 'w'"):
            read_weights(path)

    def test_invalid_json_rejected(self, tmp_path):
        path = tmp_path / "weights.json"
        path.write_text("{njson")
        with pytest.raises(ParseError):
            read_weights(path)


class TestCandidateSets:
    def test_grouping_preserves_file_order(self, tmp_path):
        path = tmp_path / "cands.jsonl"
        vec = ScoreVector((3.0, 3.0, 3.0, 3.0))
        write_candidate_rows(
            path,
            [
                ("promptB", "c1", vec),
                ("promptA", "c1", vec),
                ("promptB", "c2", vec),
            ],
        )
        sets = read_candidate_sets(path)
        assert [s.prompt_id for s in sets] == ["promptB", "promptA"]
        assert [cid for cid, _ in sets[0].candidates] == ["c1", "c2"]
        assert sets[0].n == 2

    def test_duplicate_candidate_rejected_at_parse(self, tmp_path):
        path = tmp_path / "cands.jsonl"
        vec = ScoreVector((3.0, 3.0, 3.0, 3.0))
        write_candidate_rows(path, [("p", "c1", vec), ("p", "c1", vec)])
        with pytest.raises(ValueError, match="duplicate ids"):
            read_candidate_sets(path)

    def test_bon_results_format(self, tmp_path):
        path = tmp_path / "bon.jsonl"
        write_bon_results(path, [("prompt1", [("c2", 4.5), ("c1", 3.0)])])
        [(lineno, row)] = list(iter_jsonl(path))
        assert row == {"prompt_id": "prompt1", "ranked": ["c2", "c1"], "fused": [4.5, 3.0]}


class TestByteStability:
    def test_writers_are_deterministic(self, tmp_path):
        records = [
            AnnotationRecord("img1", Dimension.LAYOUT, "r1", 4, "b1"),
            AnnotationRecord("img2", Dimension.HARMONY, "r2", 3, "b1"),
        ]
        p1, p2 = tmp_path / "a1.jsonl", tmp_path / "a2.jsonl"
        write_annotations(p1, records)
        write_annotations(p2, records)
        assert p1.read_bytes() == p2.read_bytes()

    def test_float_repr_round_trips(self, tmp_path):
        path = tmp_path / "mos.jsonl"
        record = MosRecord("img1", Dimension.LAYOUT, 44.0 / 9.0 - 2.0, 9)  # awkward float
        write_mos_records(path, [record])
        [back] = read_mos_records(path)
        assert back.mos == record.mos  # exact, not approximate
