"""Logits to calibrated scores.

A scored model answers a dimension query with one of five rating
words. Its logits over those words (ordered excellent to bad) are
softmax-normalized and collapsed to the expectation of the word
values, giving a continuous score in [1, 5] per dimension. Logits
come either from a line-delimited file (offline) or a remote HTTP
service; results are cached per (image, dimension, backend, prompt
type).
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np
import requests

from .model import (
    CANONICAL_DIMENSIONS,
    Dimension,
    RatingDistribution,
    ScoreVector,
    RATING_VALUES,
)
from .prompts import PromptType, build_query


class ScoringError(RuntimeError):
    """Scoring failed for a specific image and dimension."""

    def __init__(self, message: str, image_id: str, dimension: Dimension | None = None):
        super().__init__(message)
        self.image_id = image_id
        self.dimension = dimension


def normalize_logits(logits) -> RatingDistribution:
    """Stable softmax over the five rating-word logits.

    Logits are shifted by their maximum before exponentiation, so any
    common shift leaves the result unchanged and no overflow occurs.
    """
    arr = np.asarray(logits, dtype=np.float64)
    if arr.shape != (5,):
        raise ValueError(f"expected 5 logits (excellent..bad), got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError("logits must be finite")
    exp = np.exp(arr - arr.max())
    probs = exp / math.fsum(exp)
    return RatingDistribution(tuple(float(p) for p in probs))


def expected_score(distribution: RatingDistribution) -> float:
    """Expectation of the rating values (5..1) under the distribution."""
    return math.fsum(p * v for p, v in zip(distribution.probabilities, RATING_VALUES))


def score_from_logits(logits) -> float:
    """Softmax then expectation: one continuous score in [1, 5]."""
    return expected_score(normalize_logits(logits))


@dataclass(frozen=True)
class LogitRecord:
    """Stored logits for one (image, dimension), ordered excellent to bad."""

    image_id: str
    dimension: Dimension
    logits: tuple[float, float, float, float, float]
    backend_id: str = ""

    def to_dict(self) -> dict:
        return {
            "image_id": self.image_id,
            "dimension": self.dimension.value,
            "logits": list(self.logits),
            "backend_id": self.backend_id,
        }

    @classmethod
    def from_dict(cls, row: Mapping) -> "LogitRecord":
        logits = tuple(float(v) for v in row["logits"])
        if len(logits) != 5:
            raise ValueError(f"expected 5 logits, got {len(logits)}")
        return cls(
            image_id=str(row["image_id"]),
            dimension=Dimension.from_name(str(row["dimension"])),
            logits=logits,
            backend_id=str(row.get("backend_id", "")),
        )


class BackendMode(Enum):
    FILE_OFFLINE = "file_offline"
    REMOTE_SERVICE = "remote_service"


@dataclass(frozen=True)
class BackendConfig:
    """Where logits come from and how to ask for them."""

    mode: BackendMode = BackendMode.FILE_OFFLINE
    endpoint: str | None = None        # remote mode only
    logits_path: str | None = None     # offline mode convenience
    timeout: float = 10.0
    max_retries: int = 2
    prompt_type: PromptType = PromptType.TYPE4

    def __post_init__(self) -> None:
        if self.mode is BackendMode.REMOTE_SERVICE and not self.endpoint:
            raise ValueError("remote_service mode requires an endpoint")
        if self.mode is BackendMode.FILE_OFFLINE and self.endpoint:
            raise ValueError("file_offline mode must not set an endpoint")
        if self.timeout <= 0:
            raise ValueError(f"timeout must be > 0, got {self.timeout}")
        if self.max_retries < 0:
            raise ValueError(f"max_retries must be >= 0, got {self.max_retries}")


class OfflineLogitStore:
    """In-memory index of LogitRecords by (image_id, dimension).

    When a file contains several rows for the same key, the last row
    wins, matching append-style updates.
    """

    def __init__(self, records: Iterable[LogitRecord], source: str = "memory"):
        self.source = source
        self._index: dict[tuple[str, Dimension], LogitRecord] = {}
        for rec in records:
            self._index[(rec.image_id, rec.dimension)] = rec

    @classmethod
    def from_jsonl(cls, path) -> "OfflineLogitStore":
        from .jsonio import read_logit_records

        return cls(read_logit_records(path), source=str(path))

    def __len__(self) -> int:
        return len(self._index)

    def get(self, image_id: str, dimension: Dimension) -> LogitRecord:
        try:
            return self._index[(image_id, dimension)]
        except KeyError:
            raise ScoringError(
                f"no logits for image {image_id!r}, dimension {dimension.value!r} "
                f"in {self.source}",
                image_id=image_id,
                dimension=dimension,
            ) from None


def _renormalize_probs(probs) -> RatingDistribution:
    arr = np.asarray(probs, dtype=np.float64)
    if arr.shape != (5,):
        raise ValueError(f"expected 5 probabilities, got shape {arr.shape}")
    if not np.isfinite(arr).all() or (arr < 0).any():
        raise ValueError("probabilities must be finite and >= 0")
    total = math.fsum(arr)
    if total <= 0:
        raise ValueError("probabilities sum to zero")
    return RatingDistribution(tuple(float(p / total) for p in arr))


class Scorer:
    """Dimension scorer over an offline store or a remote service.

    Thread-safe score cache keyed by (image_id, dimension, backend,
    prompt_type); repeated calls never change a cached value.
    """

    def __init__(
        self,
        config: BackendConfig | None = None,
        store: OfflineLogitStore | None = None,
        session: requests.Session | None = None,
    ):
        self.config = config or BackendConfig()
        if self.config.mode is BackendMode.FILE_OFFLINE:
            if store is None:
                if self.config.logits_path is None:
                    raise ValueError("file_offline mode needs a store or logits_path")
                store = OfflineLogitStore.from_jsonl(self.config.logits_path)
            self._backend_key = f"offline:{store.source}"
        else:
            self._backend_key = f"remote:{self.config.endpoint}"
        self.store = store
        self._session = session or requests.Session()
        self._cache: dict[tuple, float] = {}
        self._lock = threading.Lock()

    def _fetch_remote(self, image_ref: str, dimension: Dimension) -> RatingDistribution:
        template = build_query(dimension, self.config.prompt_type)
        payload = {
            "image": image_ref,
            "dimension": dimension.value,
            "query_text": template.query_text,
        }
        attempts = self.config.max_retries + 1
        last_error = "no attempt made"
        for _ in range(attempts):
            try:
                resp = self._session.post(
                    self.config.endpoint, json=payload, timeout=self.config.timeout
                )
            except requests.RequestException as exc:
                last_error = str(exc)
                continue
            if resp.status_code != 200:
                last_error = f"HTTP {resp.status_code}"
                continue
            try:
                data = resp.json()
            except ValueError:
                last_error = "response body is not JSON"
                continue
            if "logits" in data:
                return normalize_logits(data["logits"])
            if "probs" in data:
                return _renormalize_probs(data["probs"])
            raise ScoringError(
                f"backend response has neither 'logits' nor 'probs' for image "
                f"{image_ref!r}, dimension {dimension.value!r}",
                image_id=image_ref,
                dimension=dimension,
            )
        raise ScoringError(
            f"backend unavailable for image {image_ref!r}, dimension "
            f"{dimension.value!r} after {attempts} attempt(s): {last_error}",
            image_id=image_ref,
            dimension=dimension,
        )

    def _fetch_distribution(self, image_ref: str, dimension: Dimension) -> RatingDistribution:
        if self.config.mode is BackendMode.FILE_OFFLINE:
            return normalize_logits(self.store.get(image_ref, dimension).logits)
        return self._fetch_remote(image_ref, dimension)

    def score_image(
        self,
        image_ref: str,
        dimensions: Sequence[Dimension] | None = None,
        use_cache: bool = True,
    ) -> dict[Dimension, float]:
        """Score one image on the requested dimensions (default all four).

        Returns {dimension: score} in canonical dimension order.
        """
        wanted = set(dimensions) if dimensions is not None else set(CANONICAL_DIMENSIONS)
        out: dict[Dimension, float] = {}
        for dim in CANONICAL_DIMENSIONS:
            if dim not in wanted:
                continue
            key = (image_ref, dim, self._backend_key, int(self.config.prompt_type))
            if use_cache:
                with self._lock:
                    if key in self._cache:
                        out[dim] = self._cache[key]
                        continue
            value = expected_score(self._fetch_distribution(image_ref, dim))
            with self._lock:
                self._cache[key] = value
            out[dim] = value
        return out

    def score_vector(self, image_ref: str, use_cache: bool = True) -> ScoreVector:
        """All four dimension scores as a ScoreVector."""
        scores = self.score_image(image_ref, use_cache=use_cache)
        return ScoreVector(tuple(scores[d] for d in CANONICAL_DIMENSIONS))
