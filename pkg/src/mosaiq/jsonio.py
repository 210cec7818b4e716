"""Line-delimited JSON readers and writers for every file format.

All writers emit one JSON object per line with stable key order and
Python's shortest round-trip float repr, so identical inputs always
produce identical bytes. Readers raise ParseError naming the file and
line number of the first bad row.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

from .fusion import FitResult, TieMode
from .model import (
    AnnotationRecord,
    Dimension,
    FusionWeights,
    MosRecord,
    PreferencePair,
    SchemaError,
    ScoreVector,
)
from .rewards import CandidateSet
from .scoring import LogitRecord


class ParseError(ValueError):
    """A file failed to parse; the message names file and line."""

    def __init__(self, path, lineno: int, reason: str):
        super().__init__(f"{path}:{lineno}: {reason}")
        self.path = str(path)
        self.lineno = lineno


def iter_jsonl(path) -> Iterator[tuple[int, dict]]:
    """Yield (line_number, object) for each non-blank line."""
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            try:
                obj = json.loads(stripped)
            except json.JSONDecodeError as exc:
                raise ParseError(path, lineno, f"invalid JSON ({exc.msg})") from None
            if not isinstance(obj, dict):
                raise ParseError(path, lineno, "expected a JSON object")
            yield lineno, obj


def write_jsonl(path, rows: Iterable[Mapping]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False))
            fh.write("\n")


def _parse_rows(path, builder, what: str) -> list:
    out = []
    for lineno, obj in iter_jsonl(path):
        try:
            out.append(builder(obj))
        except KeyError as exc:
            raise ParseError(path, lineno, f"bad {what}: missing field {exc.args[0]!r}") from None
        except (SchemaError, ValueError, TypeError) as exc:
            raise ParseError(path, lineno, f"bad {what}: {exc}") from None
    return out


# -- annotations --------------------------------------------------------

def read_annotations(path) -> list[AnnotationRecord]:
    return _parse_rows(path, AnnotationRecord.from_dict, "annotation record")


def write_annotations(path, records: Sequence[AnnotationRecord]) -> None:
    write_jsonl(path, (r.to_dict() for r in records))


# -- MOS -----------------------------------------------------------------

def read_mos_records(path) -> list[MosRecord]:
    return _parse_rows(path, MosRecord.from_dict, "mos record")


def write_mos_records(path, records: Sequence[MosRecord]) -> None:
    write_jsonl(path, (r.to_dict() for r in records))


# -- logits ---------------------------------------------------------------

def read_logit_records(path) -> list[LogitRecord]:
    return _parse_rows(path, LogitRecord.from_dict, "logit record")


def write_logit_records(path, records: Sequence[LogitRecord]) -> None:
    write_jsonl(path, (r.to_dict() for r in records))


# -- per-image scores ------------------------------------------------------

def _score_row(obj: Mapping) -> tuple[str, Dimension, float]:
    return (
        str(obj["image_id"]),
        Dimension.from_name(str(obj["dimension"])),
        float(obj["score"]),
    )


def read_score_rows(path) -> list[tuple[str, Dimension, float]]:
    return _parse_rows(path, _score_row, "score row")


def write_score_rows(path, rows: Sequence[tuple[str, Dimension, float]]) -> None:
    write_jsonl(
        path,
        (
            {"image_id": image_id, "dimension": dim.value, "score": score}
            for image_id, dim, score in rows
        ),
    )


def scores_by_dimension(
    rows: Sequence[tuple[str, Dimension, float]]
) -> dict[Dimension, dict[str, float]]:
    """Regroup score rows into the predictions mapping evaluation expects."""
    out: dict[Dimension, dict[str, float]] = {}
    for image_id, dim, score in rows:
        out.setdefault(dim, {})[image_id] = score
    return out


# -- gold labels ------------------------------------------------------------

def read_gold(path) -> dict[tuple[str, Dimension], float]:
    rows = _parse_rows(path, _score_row, "gold row")
    return {(image_id, dim): score for image_id, dim, score in rows}


# -- preference pairs --------------------------------------------------------

def read_preference_pairs(path) -> list[PreferencePair]:
    return _parse_rows(path, PreferencePair.from_dict, "preference pair")


def write_preference_pairs(path, pairs: Sequence[PreferencePair]) -> None:
    write_jsonl(path, (p.to_dict() for p in pairs))


# -- fusion weights (single-object JSON file) ---------------------------------

def write_weights(path, result: FitResult) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(result.to_dict(), fh, ensure_ascii=False, indent=2)
        fh.write("\n")


def read_weights(path) -> tuple[FusionWeights, dict]:
    """Weights plus the meta block (empty dict when absent)."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(path, exc.lineno, f"invalid JSON ({exc.msg})") from None
    try:
        weights = FusionWeights.from_dict(obj)
    except (SchemaError, ValueError, TypeError) as exc:
        raise ParseError(path, 1, f"bad weights file: {exc}") from None
    meta = obj.get("meta", {})
    return weights, meta if isinstance(meta, dict) else {}


# -- candidate sets ------------------------------------------------------------

def read_candidate_sets(path) -> list[CandidateSet]:
    """Group candidate rows by prompt_id, preserving file order."""
    def row(obj: Mapping) -> tuple[str, str, ScoreVector]:
        return (
            str(obj["prompt_id"]),
            str(obj["candidate_id"]),
            ScoreVector(tuple(float(v) for v in obj["scores"])),
        )

    rows = _parse_rows(path, row, "candidate row")
    grouped: dict[str, list[tuple[str, ScoreVector]]] = {}
    for prompt_id, candidate_id, vec in rows:
        grouped.setdefault(prompt_id, []).append((candidate_id, vec))
    return [
        CandidateSet(prompt_id=pid, candidates=tuple(cands))
        for pid, cands in grouped.items()
    ]


def write_candidate_rows(
    path, rows: Sequence[tuple[str, str, ScoreVector]]
) -> None:
    write_jsonl(
        path,
        (
            {"prompt_id": pid, "candidate_id": cid, "scores": list(vec.values)}
            for pid, cid, vec in rows
        ),
    )


def write_bon_results(path, results: Sequence[tuple[str, list[tuple[str, float]]]]) -> None:
    """One line per prompt: {prompt_id, ranked: [ids], fused: [scores]}."""
    write_jsonl(
        path,
        (
            {
                "prompt_id": prompt_id,
                "ranked": [cid for cid, _ in ranking],
                "fused": [score for _, score in ranking],
            }
            for prompt_id, ranking in results
        ),
    )
