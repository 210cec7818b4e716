"""Bradley-Terry fusion: learn per-dimension weights from pairwise
preferences and collapse a 4-dim score vector to one scalar.

For a pair with score vectors x_A, x_B and outcome y (1 when A is
preferred, 0 when B is, 0.5 for a kept tie), the loss is the mean
negative log-likelihood of y under sigma(Delta_x . w) plus an optional
l2 penalty. The problem is convex in w; a deterministic full-batch
gradient descent with Armijo backtracking fits it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .model import FusionWeights, PreferenceLabel, PreferencePair, ScoreVector


class TieMode(Enum):
    SOFT_HALF = "soft_half"  # ties kept with target y = 0.5
    DROP = "drop"            # ties excluded

    @classmethod
    def from_string(cls, text: str) -> "TieMode":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise ValueError(f"unknown tie mode {text!r} (expected soft_half or drop)") from None


@dataclass(frozen=True)
class FitConfig:
    """Optimizer settings for fit_weights."""

    init: tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)
    max_iters: int = 10000
    grad_tol: float = 1e-8
    l2: float = 0.0
    tie_mode: TieMode = TieMode.SOFT_HALF
    # Backtracking line search: start at alpha0, shrink until the Armijo
    # sufficient-decrease test with slope c1 passes.
    alpha0: float = 1.0
    c1: float = 1e-4
    shrink: float = 0.5
    max_backtracks: int = 60
    rng_seed: int = 0  # unused: the optimizer is deterministic; kept for interface stability

    def __post_init__(self) -> None:
        if len(self.init) != 4:
            raise ValueError(f"init must have 4 entries, got {len(self.init)}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.grad_tol <= 0:
            raise ValueError(f"grad_tol must be > 0, got {self.grad_tol}")
        if self.l2 < 0:
            raise ValueError(f"l2 must be >= 0, got {self.l2}")
        if not (0 < self.shrink < 1):
            raise ValueError(f"shrink must be in (0, 1), got {self.shrink}")
        if not (0 < self.c1 < 1):
            raise ValueError(f"c1 must be in (0, 1), got {self.c1}")
        if self.alpha0 <= 0:
            raise ValueError(f"alpha0 must be > 0, got {self.alpha0}")


@dataclass(frozen=True)
class FitResult:
    """Fitted weights plus optimizer diagnostics."""

    weights: FusionWeights
    final_loss: float
    iterations: int
    converged: bool
    pair_count_used: int
    tie_mode: TieMode

    def to_dict(self) -> dict:
        out = self.weights.as_dict()
        out["meta"] = {
            "pair_count_used": self.pair_count_used,
            "final_loss": self.final_loss,
            "tie_mode": self.tie_mode.value,
            "iterations": self.iterations,
            "converged": self.converged,
        }
        return out


_TARGETS = {PreferenceLabel.A: 1.0, PreferenceLabel.B: 0.0, PreferenceLabel.TIE: 0.5}


def prepare_pairs(
    pairs: Sequence[PreferencePair], tie_mode: TieMode = TieMode.SOFT_HALF
) -> tuple[np.ndarray, np.ndarray]:
    """Score differences Delta_x = x_A - x_B and targets y, tie-handled.

    Raises ValueError when no pairs remain (empty input, or all ties
    under Drop mode).
    """
    deltas = []
    targets = []
    for pair in pairs:
        if pair.label is PreferenceLabel.TIE and tie_mode is TieMode.DROP:
            continue
        deltas.append(np.array(pair.scores_a.values) - np.array(pair.scores_b.values))
        targets.append(_TARGETS[pair.label])
    if not deltas:
        raise ValueError("no usable pairs (empty input or all ties dropped)")
    return np.array(deltas, dtype=np.float64), np.array(targets, dtype=np.float64)


def _loss_arrays(w: np.ndarray, delta: np.ndarray, y: np.ndarray, l2: float) -> float:
    z = delta @ w
    # -ln sigma(z) = logaddexp(0, -z); -ln(1 - sigma(z)) = logaddexp(0, z)
    nll = np.mean(y * np.logaddexp(0.0, -z) + (1.0 - y) * np.logaddexp(0.0, z))
    return float(nll + l2 * np.dot(w, w))


def _gradient_arrays(w: np.ndarray, delta: np.ndarray, y: np.ndarray, l2: float) -> np.ndarray:
    z = delta @ w
    # sigma(z) via the numerically stable tanh identity
    sig = 0.5 * (1.0 + np.tanh(0.5 * z))
    return delta.T @ (sig - y) / len(y) + 2.0 * l2 * w


def bt_loss(w, pairs: Sequence[PreferencePair], config: FitConfig | None = None) -> float:
    """Mean Bradley-Terry negative log-likelihood plus l2*||w||^2."""
    cfg = config or FitConfig()
    delta, y = prepare_pairs(pairs, cfg.tie_mode)
    return _loss_arrays(np.asarray(w, dtype=np.float64), delta, y, cfg.l2)


def bt_gradient(w, pairs: Sequence[PreferencePair], config: FitConfig | None = None) -> np.ndarray:
    """Analytic gradient of bt_loss: mean (sigma(z) - y) * Delta_x + 2*l2*w."""
    cfg = config or FitConfig()
    delta, y = prepare_pairs(pairs, cfg.tie_mode)
    return _gradient_arrays(np.asarray(w, dtype=np.float64), delta, y, cfg.l2)


def fit_weights(pairs: Sequence[PreferencePair], config: FitConfig | None = None) -> FitResult:
    """Fit fusion weights by full-batch descent with Armijo backtracking.

    Deterministic for a fixed config: fixed init, fixed pair order,
    fixed reduction. Stops when the gradient's max-norm drops below
    grad_tol (converged=True), when max_iters accepted steps have been
    taken, or when backtracking cannot find any decrease (flat to
    machine precision).
    """
    cfg = config or FitConfig()
    delta, y = prepare_pairs(pairs, cfg.tie_mode)
    w = np.array(cfg.init, dtype=np.float64)
    loss = _loss_arrays(w, delta, y, cfg.l2)

    iterations = 0
    converged = False
    for _ in range(cfg.max_iters):
        grad = _gradient_arrays(w, delta, y, cfg.l2)
        if float(np.max(np.abs(grad))) < cfg.grad_tol:
            converged = True
            break
        gsq = float(np.dot(grad, grad))
        alpha = cfg.alpha0
        accepted = False
        for _ in range(cfg.max_backtracks + 1):
            w_try = w - alpha * grad
            loss_try = _loss_arrays(w_try, delta, y, cfg.l2)
            if loss_try <= loss - cfg.c1 * alpha * gsq:
                accepted = True
                break
            alpha *= cfg.shrink
        if not accepted:
            break  # no representable step decreases the loss; stop here
        w = w_try
        loss = loss_try
        iterations += 1
    else:
        # max_iters exhausted; one final convergence check
        grad = _gradient_arrays(w, delta, y, cfg.l2)
        converged = float(np.max(np.abs(grad))) < cfg.grad_tol

    return FitResult(
        weights=FusionWeights(tuple(float(v) for v in w)),
        final_loss=loss,
        iterations=iterations,
        converged=converged,
        pair_count_used=len(y),
        tie_mode=cfg.tie_mode,
    )


def fuse(scores, weights: FusionWeights) -> float:
    """Weighted sum of the four dimension scores (raw weights).

    scores may be a ScoreVector, a mapping keyed by Dimension or
    dimension name (all four required), or a length-4 sequence in
    canonical order.
    """
    if isinstance(scores, ScoreVector):
        values = scores.values
    elif isinstance(scores, Mapping):
        values = ScoreVector.from_mapping(scores).values
    else:
        values = tuple(float(v) for v in scores)
        if len(values) != 4:
            raise ValueError(f"expected 4 scores, got {len(values)}")
    return math.fsum(v * wi for v, wi in zip(values, weights.w))


def fused_scores_for_pairs(
    pairs: Sequence[PreferencePair], weights: FusionWeights
) -> dict[str, float]:
    """Fused score per image id, from the score vectors stored on pairs."""
    out: dict[str, float] = {}
    for pair in pairs:
        out[pair.image_a_id] = fuse(pair.scores_a, weights)
        out[pair.image_b_id] = fuse(pair.scores_b, weights)
    return out
