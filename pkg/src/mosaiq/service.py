"""HTTP service: scoring, fusion, Best-of-N, and annotation collection.

State lives in data_dir as append-only line-delimited logs plus two
read-only queue files; a restart replays the logs and reaches the
exact state of an uninterrupted run. Writes are serialized through a
single lock. Endpoints are versioned under /v1; mutating endpoints
optionally require a bearer token.

data_dir layout:
    pair_queue.jsonl    {pair_id, image_a, image_b, scores_a?, scores_b?}   (input)
    rating_queue.jsonl  {image_id, image, dimensions?}                      (input)
    preferences.jsonl   {pair_id, annotator_id, label, submitted_at}        (append-only)
    annotations.jsonl   {image_id, dimension, annotator_id, score, batch_id,
                         submitted_at}                                      (append-only)
    servings.jsonl      {kind, *_id, annotator_id, left}                    (append-only)
    images/             files served at /v1/images/{name}
    weights.json        written only by the fit endpoint (or the fit CLI)
"""

from __future__ import annotations

import json
import os
import threading
import time
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np
from fastapi import Depends, FastAPI, HTTPException, Query, Request
from fastapi.responses import FileResponse
from pydantic import BaseModel

from .fusion import FitConfig, FitResult, TieMode, fit_weights, fuse
from .jsonio import iter_jsonl, read_weights, write_weights
from .model import (
    CANONICAL_DIMENSIONS,
    Dimension,
    FusionWeights,
    PreferenceLabel,
    PreferencePair,
    SchemaError,
    ScoreVector,
)
from .prompts import DIMENSION_CRITERIA, PromptType
from .rewards import CandidateSet, best_of_n
from .scoring import BackendConfig, BackendMode, Scorer, ScoringError, score_from_logits


@dataclass(frozen=True)
class ServiceConfig:
    """Runtime settings for the service."""

    data_dir: Path
    host: str = "127.0.0.1"
    port: int = 8000
    weights_path: Path | None = None  # default: data_dir/weights.json
    backend: BackendConfig = field(default_factory=BackendConfig)
    auth_token: str | None = None
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if not (1 <= self.port <= 65535):
            raise ValueError(f"port must be in [1, 65535], got {self.port}")

    @property
    def resolved_weights_path(self) -> Path:
        return self.weights_path or (Path(self.data_dir) / "weights.json")


_CONFIG_KEYS = {
    "host",
    "port",
    "data_dir",
    "weights_path",
    "auth_token",
    "rng_seed",
    "backend_mode",
    "backend_endpoint",
    "backend_logits_path",
    "backend_timeout",
    "backend_max_retries",
    "backend_prompt_type",
}

ENV_PREFIX = "MOSAIQ_"


def load_service_config(
    path=None, env: Mapping[str, str] | None = None, **overrides
) -> ServiceConfig:
    """Build a ServiceConfig from a flat key=value file, the environment,
    and keyword overrides (later sources win, overrides last).

    Environment variables use the key names uppercased with a MOSAIQ_
    prefix (e.g. MOSAIQ_PORT, MOSAIQ_BACKEND_MODE).
    """
    raw: dict[str, str] = {}
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                stripped = line.strip()
                if not stripped or stripped.startswith("#"):
                    continue
                if "=" not in stripped:
                    raise ValueError(f"{path}:{lineno}: expected key = value")
                key, _, value = stripped.partition("=")
                key = key.strip().lower()
                if key not in _CONFIG_KEYS:
                    raise ValueError(f"{path}:{lineno}: unknown config key {key!r}")
                raw[key] = value.strip()
    env = os.environ if env is None else env
    for key in _CONFIG_KEYS:
        env_value = env.get(ENV_PREFIX + key.upper())
        if env_value is not None:
            raw[key] = env_value
    for key, value in overrides.items():
        if value is None:
            continue
        if key not in _CONFIG_KEYS:
            raise ValueError(f"unknown config key {key!r}")
        raw[key] = str(value)

    if "data_dir" not in raw:
        raise ValueError("data_dir is required (config file, MOSAIQ_DATA_DIR, or flag)")

    backend_mode = BackendMode(raw.get("backend_mode", BackendMode.FILE_OFFLINE.value))
    backend = BackendConfig(
        mode=backend_mode,
        endpoint=raw.get("backend_endpoint"),
        logits_path=raw.get("backend_logits_path"),
        timeout=float(raw.get("backend_timeout", 10.0)),
        max_retries=int(raw.get("backend_max_retries", 2)),
        prompt_type=PromptType(int(raw.get("backend_prompt_type", 4))),
    )
    return ServiceConfig(
        data_dir=Path(raw["data_dir"]),
        host=raw.get("host", "127.0.0.1"),
        port=int(raw.get("port", 8000)),
        weights_path=Path(raw["weights_path"]) if raw.get("weights_path") else None,
        backend=backend,
        auth_token=raw.get("auth_token") or None,
        rng_seed=int(raw.get("rng_seed", 0)),
    )


@dataclass(frozen=True)
class _QueuedPair:
    pair_id: str
    image_a: str
    image_b: str
    scores_a: ScoreVector | None
    scores_b: ScoreVector | None


@dataclass(frozen=True)
class _QueuedImage:
    image_id: str
    image: str
    dimensions: tuple[Dimension, ...]


def _opt_vector(row: Mapping, key: str) -> ScoreVector | None:
    if key not in row or row[key] is None:
        return None
    return ScoreVector(tuple(float(v) for v in row[key]))


class ServiceState:
    """All mutable service state; rebuilt from data_dir on startup."""

    def __init__(self, config: ServiceConfig):
        self.config = config
        self.data_dir = Path(config.data_dir)
        if not self.data_dir.is_dir():
            raise ValueError(f"data_dir {self.data_dir} is not a directory")
        self._lock = threading.Lock()

        self.pair_queue: dict[str, _QueuedPair] = {}
        queue_path = self.data_dir / "pair_queue.jsonl"
        if queue_path.exists():
            for _, row in iter_jsonl(queue_path):
                pair = _QueuedPair(
                    pair_id=str(row["pair_id"]),
                    image_a=str(row["image_a"]),
                    image_b=str(row["image_b"]),
                    scores_a=_opt_vector(row, "scores_a"),
                    scores_b=_opt_vector(row, "scores_b"),
                )
                self.pair_queue[pair.pair_id] = pair

        self.rating_queue: list[_QueuedImage] = []
        rating_path = self.data_dir / "rating_queue.jsonl"
        if rating_path.exists():
            for _, row in iter_jsonl(rating_path):
                dims = row.get("dimensions")
                self.rating_queue.append(
                    _QueuedImage(
                        image_id=str(row["image_id"]),
                        image=str(row["image"]),
                        dimensions=tuple(Dimension.from_name(d) for d in dims)
                        if dims
                        else CANONICAL_DIMENSIONS,
                    )
                )

        # Latest submission wins; the log keeps the full audit trail.
        self.preferences: dict[tuple[str, str], PreferenceLabel] = {}
        pref_path = self.data_dir / "preferences.jsonl"
        if pref_path.exists():
            for _, row in iter_jsonl(pref_path):
                key = (str(row["pair_id"]), str(row["annotator_id"]))
                self.preferences[key] = PreferenceLabel.from_string(str(row["label"]))

        self.ratings: dict[tuple[str, Dimension, str], int] = {}
        ann_path = self.data_dir / "annotations.jsonl"
        if ann_path.exists():
            for _, row in iter_jsonl(ann_path):
                key = (
                    str(row["image_id"]),
                    Dimension.from_name(str(row["dimension"])),
                    str(row["annotator_id"]),
                )
                self.ratings[key] = int(row["score"])

        self.weights: FusionWeights | None = None
        self.weights_meta: dict = {}
        wpath = config.resolved_weights_path
        if Path(wpath).exists():
            self.weights, self.weights_meta = read_weights(wpath)

        self._scorer: Scorer | None = None

    # -- persistence ---------------------------------------------------

    def _append(self, filename: str, row: dict) -> None:
        with open(self.data_dir / filename, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(row, ensure_ascii=False))
            fh.write("\n")
            fh.flush()

    # -- scoring --------------------------------------------------------

    def scorer(self) -> Scorer:
        with self._lock:
            if self._scorer is None:
                self._scorer = Scorer(self.config.backend)
            return self._scorer

    # -- pairwise flow ----------------------------------------------------

    def _pair_label_counts(self) -> dict[str, int]:
        counts = {pid: 0 for pid in self.pair_queue}
        for (pid, _), _label in self.preferences.items():
            if pid in counts:
                counts[pid] += 1
        return counts

    def _display_left(self, pair_id: str, annotator_id: str) -> str:
        rng = np.random.default_rng(
            [
                self.config.rng_seed,
                zlib.crc32(pair_id.encode("utf-8")),
                zlib.crc32(annotator_id.encode("utf-8")),
            ]
        )
        return "a" if int(rng.integers(0, 2)) == 0 else "b"

    def next_pair(self, annotator_id: str) -> tuple[_QueuedPair | None, str, tuple[int, int]]:
        """Least-labeled unserved pair for this annotator, ties by pair_id.

        Returns (pair or None, left display slot, (labeled, total)).
        The left/right orientation is deterministic per (pair,
        annotator) and recorded in the servings log.
        """
        with self._lock:
            labeled_by_me = {pid for (pid, a) in self.preferences if a == annotator_id}
            progress = (
                sum(1 for pid in self.pair_queue if pid in labeled_by_me),
                len(self.pair_queue),
            )
            pending = sorted(
                (pid for pid in self.pair_queue if pid not in labeled_by_me),
            )
            if not pending:
                return None, "a", progress
            counts = self._pair_label_counts()
            chosen = min(pending, key=lambda pid: (counts[pid], pid))
            left = self._display_left(chosen, annotator_id)
            self._append(
                "servings.jsonl",
                {
                    "kind": "pair",
                    "pair_id": chosen,
                    "annotator_id": annotator_id,
                    "left": left,
                },
            )
            return self.pair_queue[chosen], left, progress

    def submit_preference(
        self,
        pair_id: str,
        annotator_id: str,
        label: PreferenceLabel,
        submitted_at: float | None = None,
    ) -> dict:
        with self._lock:
            if pair_id not in self.pair_queue:
                raise KeyError(pair_id)
            key = (pair_id, annotator_id)
            resubmission = key in self.preferences
            self._append(
                "preferences.jsonl",
                {
                    "pair_id": pair_id,
                    "annotator_id": annotator_id,
                    "label": label.value,
                    "submitted_at": time.time() if submitted_at is None else submitted_at,
                },
            )
            self.preferences[key] = label
            return {
                "pair_id": pair_id,
                "annotator_id": annotator_id,
                "label": label.value,
                "resubmission": resubmission,
            }

    def effective_pairs(self) -> list[PreferencePair]:
        """One canonical PreferencePair per (pair_id, annotator), latest label.

        Only pairs whose queue row carries both score vectors can feed
        the fitter; a labeled pair without vectors raises ValueError.
        """
        out = []
        for (pair_id, annotator_id) in sorted(self.preferences):
            label = self.preferences[(pair_id, annotator_id)]
            row = self.pair_queue.get(pair_id)
            if row is None:
                continue  # label for a pair no longer queued
            if row.scores_a is None or row.scores_b is None:
                raise ValueError(
                    f"pair {pair_id!r} has no stored score vectors; cannot fit"
                )
            out.append(
                PreferencePair(
                    pair_id=pair_id,
                    image_a_id=row.image_a,
                    image_b_id=row.image_b,
                    scores_a=row.scores_a,
                    scores_b=row.scores_b,
                    label=label,
                    annotator_id=annotator_id,
                )
            )
        return out

    def fit(self, config: FitConfig) -> FitResult:
        pairs = self.effective_pairs()
        if not pairs:
            raise ValueError("no labeled pairs to fit")
        result = fit_weights(pairs, config)
        with self._lock:
            write_weights(self.config.resolved_weights_path, result)
            self.weights = result.weights
            self.weights_meta = result.to_dict()["meta"]
        return result

    # -- rating flow --------------------------------------------------------

    def _rating_items(self, dimension: Dimension | None) -> list[tuple[_QueuedImage, Dimension]]:
        return [
            (img, dim)
            for img in self.rating_queue
            for dim in img.dimensions
            if dimension is None or dim is dimension
        ]

    def next_rating(
        self, annotator_id: str, dimension: Dimension | None
    ) -> tuple[_QueuedImage | None, Dimension | None, tuple[int, int]]:
        with self._lock:
            items = self._rating_items(dimension)
            pending = [
                (img, dim)
                for img, dim in items
                if (img.image_id, dim, annotator_id) not in self.ratings
            ]
            progress = (len(items) - len(pending), len(items))
            if not pending:
                return None, None, progress
            counts: dict[tuple[str, Dimension], int] = {}
            for (image_id, dim, _a) in self.ratings:
                counts[(image_id, dim)] = counts.get((image_id, dim), 0) + 1
            img, dim = min(
                pending,
                key=lambda it: (counts.get((it[0].image_id, it[1]), 0), it[0].image_id, it[1].position),
            )
            self._append(
                "servings.jsonl",
                {
                    "kind": "rating",
                    "image_id": img.image_id,
                    "dimension": dim.value,
                    "annotator_id": annotator_id,
                },
            )
            return img, dim, progress

    def submit_annotation(
        self,
        image_id: str,
        dimension: Dimension,
        annotator_id: str,
        score: int,
        batch_id: str = "",
        submitted_at: float | None = None,
    ) -> dict:
        if score not in (1, 2, 3, 4, 5):
            raise SchemaError(f"score must be an integer in [1, 5], got {score!r}")
        with self._lock:
            known = any(
                img.image_id == image_id and dimension in img.dimensions
                for img in self.rating_queue
            )
            if not known:
                raise KeyError(image_id)
            key = (image_id, dimension, annotator_id)
            resubmission = key in self.ratings
            self._append(
                "annotations.jsonl",
                {
                    "image_id": image_id,
                    "dimension": dimension.value,
                    "annotator_id": annotator_id,
                    "score": score,
                    "batch_id": batch_id,
                    "submitted_at": time.time() if submitted_at is None else submitted_at,
                },
            )
            self.ratings[key] = score
            return {
                "image_id": image_id,
                "dimension": dimension.value,
                "annotator_id": annotator_id,
                "score": score,
                "resubmission": resubmission,
            }

    def image_url(self, ref: str) -> str:
        """Map a queue image reference to a URL the browser can load."""
        if ref.startswith(("http://", "https://", "/")):
            return ref
        return f"/v1/images/{ref}"


# -- request bodies -----------------------------------------------------------


class ScoreRequest(BaseModel):
    image_id: str | None = None
    logits: dict[str, list[float]] | None = None
    dimensions: list[str] | None = None


class FuseRequest(BaseModel):
    scores: dict[str, float] | list[float]


class BonCandidate(BaseModel):
    candidate_id: str
    scores: list[float]


class BonRequest(BaseModel):
    prompt_id: str
    candidates: list[BonCandidate]


class PreferenceSubmission(BaseModel):
    pair_id: str
    annotator_id: str
    label: str
    submitted_at: float | None = None


class AnnotationSubmission(BaseModel):
    image_id: str
    dimension: str
    annotator_id: str
    score: int
    batch_id: str = ""
    submitted_at: float | None = None


class FitRequest(BaseModel):
    tie_mode: str = "soft_half"
    l2: float = 0.0
    max_iters: int = 10000
    grad_tol: float = 1e-8


def create_app(config: ServiceConfig) -> FastAPI:
    state = ServiceState(config)
    app = FastAPI(title="mosaiq", version="0.1.0")
    app.state.mosaiq = state

    def require_auth(request: Request) -> None:
        if config.auth_token is None:
            return
        header = request.headers.get("authorization", "")
        if header != f"Bearer {config.auth_token}":
            raise HTTPException(status_code=401, detail="missing or invalid bearer token")

    def current_weights() -> FusionWeights:
        if state.weights is None:
            raise HTTPException(
                status_code=409,
                detail="no fusion weights available; fit first (POST /v1/fusion/fit)",
            )
        return state.weights

    @app.get("/v1/health")
    def health() -> dict:
        return {
            "status": "ok",
            "pairs_total": len(state.pair_queue),
            "rating_items_total": len(state._rating_items(None)),
            "weights_loaded": state.weights is not None,
        }

    @app.post("/v1/score")
    def score(req: ScoreRequest) -> dict:
        if req.dimensions is not None:
            try:
                wanted = [Dimension.from_name(d) for d in req.dimensions]
            except SchemaError as exc:
                raise HTTPException(status_code=400, detail=str(exc))
        else:
            wanted = list(CANONICAL_DIMENSIONS)

        scores: dict[str, float] = {}
        if req.logits is not None:
            try:
                by_dim = {Dimension.from_name(k): v for k, v in req.logits.items()}
                for dim in wanted:
                    if dim not in by_dim:
                        raise SchemaError(f"no logits for dimension {dim.value!r}")
                    scores[dim.value] = score_from_logits(by_dim[dim])
            except (SchemaError, ValueError) as exc:
                raise HTTPException(status_code=400, detail=str(exc))
        else:
            if not req.image_id:
                raise HTTPException(
                    status_code=400, detail="provide image_id or inline logits"
                )
            try:
                result = state.scorer().score_image(req.image_id, wanted)
            except ScoringError as exc:
                raise HTTPException(status_code=404, detail=str(exc))
            except ValueError as exc:
                raise HTTPException(status_code=400, detail=str(exc))
            scores = {dim.value: value for dim, value in result.items()}

        out: dict = {"image_id": req.image_id, "scores": scores}
        if all(d.value in scores for d in CANONICAL_DIMENSIONS):
            out["vector"] = [scores[d.value] for d in CANONICAL_DIMENSIONS]
        return out

    @app.post("/v1/fuse")
    def fuse_endpoint(req: FuseRequest) -> dict:
        weights = current_weights()
        try:
            value = fuse(req.scores, weights)
        except (SchemaError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"fused": value, "weights": list(weights.w)}

    @app.post("/v1/bon")
    def bon(req: BonRequest) -> dict:
        weights = current_weights()
        try:
            cset = CandidateSet(
                prompt_id=req.prompt_id,
                candidates=tuple(
                    (c.candidate_id, ScoreVector(tuple(float(v) for v in c.scores)))
                    for c in req.candidates
                ),
            )
        except (SchemaError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        ranking = best_of_n(cset, weights)
        return {
            "prompt_id": req.prompt_id,
            "ranked": [cid for cid, _ in ranking],
            "fused": [score for _, score in ranking],
        }

    @app.get("/v1/pairs/next")
    def pairs_next(
        annotator: str = Query(min_length=1),
        include_scores: bool = False,
    ) -> dict:
        pair, left, progress = state.next_pair(annotator)
        body: dict = {"progress": {"labeled": progress[0], "total": progress[1]}}
        if pair is None:
            body["pair"] = None
            return body
        payload = {
            "pair_id": pair.pair_id,
            "image_a_url": state.image_url(pair.image_a),
            "image_b_url": state.image_url(pair.image_b),
            "left": left,  # which canonical slot renders on the left
        }
        if include_scores:
            payload["scores_a"] = None if pair.scores_a is None else list(pair.scores_a.values)
            payload["scores_b"] = None if pair.scores_b is None else list(pair.scores_b.values)
        body["pair"] = payload
        return body

    @app.post("/v1/preferences", dependencies=[Depends(require_auth)])
    def preferences(sub: PreferenceSubmission) -> dict:
        try:
            label = PreferenceLabel.from_string(sub.label)
        except SchemaError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        try:
            return state.submit_preference(
                sub.pair_id, sub.annotator_id, label, sub.submitted_at
            )
        except KeyError:
            raise HTTPException(
                status_code=404, detail=f"unknown pair_id {sub.pair_id!r}"
            )

    @app.post("/v1/fusion/fit", dependencies=[Depends(require_auth)])
    def fusion_fit(req: FitRequest) -> dict:
        try:
            cfg = FitConfig(
                tie_mode=TieMode.from_string(req.tie_mode),
                l2=req.l2,
                max_iters=req.max_iters,
                grad_tol=req.grad_tol,
            )
            result = state.fit(cfg)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return result.to_dict()

    @app.get("/v1/weights")
    def weights() -> dict:
        current = current_weights()
        out = current.as_dict()
        out["meta"] = state.weights_meta
        return out

    @app.get("/v1/ratings/next")
    def ratings_next(
        annotator: str = Query(min_length=1),
        dimension: str | None = None,
    ) -> dict:
        dim = None
        if dimension is not None:
            try:
                dim = Dimension.from_name(dimension)
            except SchemaError as exc:
                raise HTTPException(status_code=400, detail=str(exc))
        img, served_dim, progress = state.next_rating(annotator, dim)
        body: dict = {"progress": {"labeled": progress[0], "total": progress[1]}}
        if img is None:
            body["item"] = None
            return body
        body["item"] = {
            "image_id": img.image_id,
            "image_url": state.image_url(img.image),
            "dimension": served_dim.value,
            "guideline_text": DIMENSION_CRITERIA[served_dim],
        }
        return body

    @app.post("/v1/annotations", dependencies=[Depends(require_auth)])
    def annotations(sub: AnnotationSubmission) -> dict:
        try:
            dim = Dimension.from_name(sub.dimension)
            return state.submit_annotation(
                sub.image_id, dim, sub.annotator_id, sub.score, sub.batch_id, sub.submitted_at
            )
        except SchemaError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        except KeyError:
            raise HTTPException(
                status_code=404,
                detail=f"image {sub.image_id!r} not queued for dimension {sub.dimension!r}",
            )

    @app.get("/v1/images/{name}")
    def images(name: str):
        root = (state.data_dir / "images").resolve()
        target = (root / name).resolve()
        if root not in target.parents and target != root:
            raise HTTPException(status_code=404, detail="not found")
        if not target.is_file():
            raise HTTPException(status_code=404, detail="not found")
        return FileResponse(target)

    return app


def run_service(config: ServiceConfig) -> None:
    """Run the service until interrupted. Raises RuntimeError when the
    port is already bound."""
    import uvicorn

    app = create_app(config)
    server = uvicorn.Server(
        uvicorn.Config(app, host=config.host, port=config.port, log_level="warning")
    )
    try:
        server.run()
    except OSError as exc:
        raise RuntimeError(
            f"cannot listen on {config.host}:{config.port}: {exc.strerror or exc}"
        ) from exc
