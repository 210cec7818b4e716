"""Downstream reward consumers: Best-of-N selection and group-relative
policy-optimization math (advantages, clipped surrogate, running
reward statistics).

Fused scores live in [1, 5]; rescale_to_unit maps them to [0, 1] via
(s - 1) / 4 for reward pipelines that expect a unit range. The
transform is optional and recorded in output metadata wherever the
CLI or service applies it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .fusion import fuse
from .model import FusionWeights, ScoreVector


@dataclass(frozen=True)
class CandidateSet:
    """Ordered candidates for one prompt, each with a full score vector."""

    prompt_id: str
    candidates: tuple[tuple[str, ScoreVector], ...]

    def __post_init__(self) -> None:
        if len(self.candidates) < 1:
            raise ValueError(f"candidate set {self.prompt_id!r} is empty")
        ids = [cid for cid, _ in self.candidates]
        if len(set(ids)) != len(ids):
            dupes = sorted({c for c in ids if ids.count(c) > 1})
            raise ValueError(
                f"candidate set {self.prompt_id!r} has duplicate ids: {', '.join(dupes)}"
            )

    @property
    def n(self) -> int:
        return len(self.candidates)


def best_of_n(
    candidate_set: CandidateSet, weights: FusionWeights
) -> list[tuple[str, float]]:
    """Candidates ranked by fused score, best first.

    The sort is stable: candidates with equal fused scores keep their
    original list order.
    """
    scored = [(cid, fuse(vec, weights)) for cid, vec in candidate_set.candidates]
    return sorted(scored, key=lambda item: item[1], reverse=True)


@dataclass(frozen=True)
class RewardGroup:
    """Rewards of one sampled group of outputs."""

    group_id: str
    rewards: tuple[float, ...]
    epsilon_stab: float = 1e-8

    def __post_init__(self) -> None:
        if len(self.rewards) < 1:
            raise ValueError(f"reward group {self.group_id!r} is empty")
        for r in self.rewards:
            if not math.isfinite(r):
                raise ValueError(f"reward group {self.group_id!r} has non-finite reward {r!r}")
        if self.epsilon_stab <= 0:
            raise ValueError(f"epsilon_stab must be > 0, got {self.epsilon_stab}")


def grpo_advantages(group: RewardGroup, standardize: bool = True) -> np.ndarray:
    """Group-relative advantages.

    Default: (r_i - mean(r)) / (popstd(r) + epsilon_stab). With
    standardize=False only the mean is subtracted. The advantage of
    output i applies to all its tokens.
    """
    r = np.asarray(group.rewards, dtype=np.float64)
    centered = r - r.mean()
    if not standardize:
        return centered
    return centered / (r.std() + group.epsilon_stab)


@dataclass(frozen=True)
class GrpoStep:
    """Inputs of one surrogate-objective evaluation.

    ratios[i][t] is the per-token probability ratio (new policy over
    sampling policy) for token t of output i; ref_log_ratio[i][t] is
    ln(reference policy / new policy) for the same token. advantages
    holds one value per output.
    """

    ratios: tuple[tuple[float, ...], ...]
    advantages: tuple[float, ...]
    ref_log_ratio: tuple[tuple[float, ...], ...] = ()
    clip_eps: float = 0.2
    kl_beta: float = 0.0

    def __post_init__(self) -> None:
        g = len(self.ratios)
        if g < 1:
            raise ValueError("need at least one output")
        if len(self.advantages) != g:
            raise ValueError(
                f"{g} outputs but {len(self.advantages)} advantages"
            )
        ref = self.ref_log_ratio
        if self.kl_beta != 0.0 or ref:
            if len(ref) != g:
                raise ValueError(f"{g} outputs but {len(ref)} ref_log_ratio rows")
        if not (0.0 < self.clip_eps < 1.0):
            raise ValueError(f"clip_eps must be in (0, 1), got {self.clip_eps}")
        if self.kl_beta < 0:
            raise ValueError(f"kl_beta must be >= 0, got {self.kl_beta}")
        for i, row in enumerate(self.ratios):
            if len(row) < 1:
                raise ValueError(f"output {i} has no tokens")
            for rho in row:
                if not math.isfinite(rho) or rho <= 0:
                    raise ValueError(f"output {i}: ratios must be finite and > 0, got {rho!r}")
            if ref and len(ref[i]) != len(row):
                raise ValueError(
                    f"output {i}: {len(row)} ratio tokens but {len(ref[i])} ref_log_ratio tokens"
                )


def grpo_surrogate(step: GrpoStep) -> float:
    """Clipped group-relative surrogate objective.

    J = (1/G) sum_i (1/|o_i|) sum_t { min[rho*A_i, clip(rho, 1-eps, 1+eps)*A_i]
        - beta * k3(l_it) }     with k3(l) = e^l - l - 1.
    """
    per_output = np.empty(len(step.ratios), dtype=np.float64)
    for i, row in enumerate(step.ratios):
        rho = np.asarray(row, dtype=np.float64)
        adv = step.advantages[i]
        term = np.minimum(rho * adv, np.clip(rho, 1.0 - step.clip_eps, 1.0 + step.clip_eps) * adv)
        if step.kl_beta != 0.0:
            l = np.asarray(step.ref_log_ratio[i], dtype=np.float64)
            term = term - step.kl_beta * (np.exp(l) - l - 1.0)
        per_output[i] = term.mean()
    return float(per_output.mean())


class RunningRewardStats:
    """Streaming mean / population std over a training window (Welford)."""

    def __init__(self) -> None:
        self.count = 0
        self._mean = 0.0
        self._m2 = 0.0

    def update(self, value: float) -> None:
        if not math.isfinite(value):
            raise ValueError(f"reward must be finite, got {value!r}")
        self.count += 1
        delta = value - self._mean
        self._mean += delta / self.count
        self._m2 += delta * (value - self._mean)

    def update_many(self, values: Iterable[float]) -> None:
        for v in values:
            self.update(v)

    @property
    def mean(self) -> float:
        if self.count < 1:
            raise ValueError("no rewards observed yet")
        return self._mean

    @property
    def popstd(self) -> float:
        if self.count < 1:
            raise ValueError("no rewards observed yet")
        return math.sqrt(max(self._m2, 0.0) / self.count)

    def summary(self) -> dict:
        return {"mean": self.mean, "popstd": self.popstd, "count": self.count}


def reward_stats(rewards: Sequence[float]) -> dict:
    """{mean, popstd, count} of a reward window (streaming accumulation)."""
    stats = RunningRewardStats()
    stats.update_many(rewards)
    return stats.summary()


def rescale_to_unit(score: float) -> float:
    """Map a fused score from [1, 5] to [0, 1]: (s - 1) / 4."""
    return (score - 1.0) / 4.0
