"""Reward-consumer tests: Best-of-N, group advantages, surrogate, stats."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from mosaiq.model import FusionWeights, ScoreVector
from mosaiq.rewards import (
    CandidateSet,
    GrpoStep,
    RewardGroup,
    RunningRewardStats,
    best_of_n,
    grpo_advantages,
    grpo_surrogate,
    rescale_to_unit,
    reward_stats,
)

EQUAL_W = FusionWeights((0.25, 0.25, 0.25, 0.25))


def _vec(v):
    return ScoreVector((v, v, v, v))


class TestBestOfN:
    def test_ranks_by_fused_score(self):
        cset = CandidateSet(
            "prompt1",
            (
                ("c_low", _vec(2.0)),
                ("c_high", _vec(5.0)),
                ("c_mid", _vec(3.5)),
            ),
        )
        ranked = best_of_n(cset, EQUAL_W)
        assert [cid for cid, _ in ranked] == ["c_high", "c_mid", "c_low"]
        assert ranked[0][1] == pytest.approx(5.0)

    def test_equal_scores_keep_original_order(self):
        cset = CandidateSet(
            "prompt1",
            (
                ("first", _vec(3.0)),
                ("second", _vec(3.0)),
                ("third", _vec(3.0)),
                ("winner", _vec(4.0)),
            ),
        )
        ranked = best_of_n(cset, EQUAL_W)
        assert [cid for cid, _ in ranked] == ["winner", "first", "second", "third"]

    def test_single_candidate(self):
        cset = CandidateSet("p", (("only", _vec(1.0)),))
        assert best_of_n(cset, EQUAL_W) == [("only", pytest.approx(1.0))]

    def test_weights_change_the_ranking(self):
        cset = CandidateSet(
            "p",
            (
                ("layout_strong", ScoreVector((5.0, 1.0, 1.0, 1.0))),
                ("harmony_strong", ScoreVector((1.0, 5.0, 1.0, 1.0))),
            ),
        )
        layout_first = best_of_n(cset, FusionWeights((1.0, 0.0, 0.0, 0.0)))
        harmony_first = best_of_n(cset, FusionWeights((0.0, 1.0, 0.0, 0.0)))
        assert layout_first[0][0] == "layout_strong"
        assert harmony_first[0][0] == "harmony_strong"

    def test_duplicate_ids_rejected(self):
        with pytest.raises(ValueError, match="duplicate ids: c1"):
            CandidateSet("p", (("c1", _vec(1.0)), ("c1", _vec(2.0))))

    def test_empty_set_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            CandidateSet("p", ())


class TestGrpoAdvantages:
    def test_hand_value(self):
        group = RewardGroup("g1", (0.6, 0.8, 1.0))
        adv = grpo_advantages(group)
        expected = 0.2 / (math.sqrt(0.08 / 3) + 1e-8)
        assert_allclose(adv, [-expected, 0.0, expected], atol=1e-12)
        assert adv[2] == pytest.approx(math.sqrt(1.5), abs=1e-6)

    def test_mean_zero_and_unit_std(self):
        rng = np.random.default_rng(42)
        for _ in range(50):
            rewards = tuple(rng.uniform(0, 1, size=int(rng.integers(2, 40))))
            if np.std(rewards) == 0.0:
                continue
            adv = grpo_advantages(RewardGroup("g", rewards))
            assert abs(adv.mean()) < 1e-10
            assert adv.std() == pytest.approx(1.0, abs=1e-6)

    def test_centered_only_mode(self):
        group = RewardGroup("g1", (1.0, 2.0, 3.0, 6.0))
        adv = grpo_advantages(group, standardize=False)
        assert_allclose(adv, [-2.0, -1.0, 0.0, 3.0], atol=1e-12)

    def test_identical_rewards_stay_finite(self):
        adv = grpo_advantages(RewardGroup("g1", (0.5, 0.5, 0.5)))
        assert_allclose(adv, [0.0, 0.0, 0.0], atol=1e-12)

    def test_single_output_group(self):
        adv = grpo_advantages(RewardGroup("g1", (0.7,)))
        assert_allclose(adv, [0.0], atol=1e-12)

    def test_group_validation(self):
        with pytest.raises(ValueError, match="empty"):
            RewardGroup("g1", ())
        with pytest.raises(ValueError, match="non-finite"):
            RewardGroup("g1", (0.5, math.nan))
        with pytest.raises(ValueError, match="epsilon_stab"):
            RewardGroup("g1", (0.5,), epsilon_stab=0.0)


class TestGrpoSurrogate:
    def test_unclipped_ratio_one_equals_mean_advantage(self):
        advantages = (0.5, -1.25, 2.0, 0.75)
        token_counts = (1, 2, 4, 8)  # powers of two: token means are exact
        step = GrpoStep(
            ratios=tuple((1.0,) * t for t in token_counts),
            advantages=advantages,
        )
        assert grpo_surrogate(step) == float(np.mean(advantages))

    def test_positive_advantage_clips_high_ratio(self):
        step = GrpoStep(ratios=((2.0,),), advantages=(1.0,))
        assert grpo_surrogate(step) == pytest.approx(1.2)  # clip at 1 + 0.2

    def test_negative_advantage_takes_pessimistic_branch(self):
        step = GrpoStep(ratios=((0.5,),), advantages=(-1.0,))
        # min(0.5 * -1, 0.8 * -1) = -0.8
        assert grpo_surrogate(step) == pytest.approx(-0.8)

    def test_ratio_inside_clip_window_untouched(self):
        step = GrpoStep(ratios=((1.1,),), advantages=(1.0,))
        assert grpo_surrogate(step) == pytest.approx(1.1)

    def test_kl_penalty_hand_value(self):
        l = math.log(2.0)
        step = GrpoStep(
            ratios=((1.0,),),
            advantages=(1.0,),
            ref_log_ratio=((l,),),
            kl_beta=0.5,
        )
        expected = 1.0 - 0.5 * (2.0 - l - 1.0)
        assert grpo_surrogate(step) == pytest.approx(expected, abs=1e-12)

    def test_kl_estimator_nonnegative(self):
        rng = np.random.default_rng(42)
        for _ in range(20):
            logs = tuple(float(v) for v in rng.normal(0, 1, size=5))
            step = GrpoStep(
                ratios=((1.0,) * 5,),
                advantages=(0.0,),
                ref_log_ratio=(logs,),
                kl_beta=1.0,
            )
            assert grpo_surrogate(step) <= 0.0  # -beta * k3 with k3 >= 0

    def test_zero_log_ratio_means_zero_penalty(self):
        step = GrpoStep(
            ratios=((1.0, 1.0),),
            advantages=(0.5,),
            ref_log_ratio=((0.0, 0.0),),
            kl_beta=10.0,
        )
        assert grpo_surrogate(step) == pytest.approx(0.5, abs=1e-12)

    def test_tokens_averaged_within_output_first(self):
        # one output with 2 tokens, one with 1: outputs weigh equally
        step = GrpoStep(ratios=((1.0, 1.0), (1.0,)), advantages=(1.0, 0.0))
        assert grpo_surrogate(step) == pytest.approx(0.5)

    def test_validation(self):
        with pytest.raises(ValueError, match="at least one output"):
            GrpoStep(ratios=(), advantages=())
        with pytest.raises(ValueError, match="advantages"):
            GrpoStep(ratios=((1.0,),), advantages=(1.0, 2.0))
        with pytest.raises(ValueError, match="no tokens"):
            GrpoStep(ratios=((),), advantages=(1.0,))
        with pytest.raises(ValueError, match="finite and > 0"):
            GrpoStep(ratios=((-1.0,),), advantages=(1.0,))
        with pytest.raises(ValueError, match="clip_eps"):
            GrpoStep(ratios=((1.0,),), advantages=(1.0,), clip_eps=1.0)
        with pytest.raises(ValueError, match="ref_log_ratio rows"):
            GrpoStep(ratios=((1.0,),), advantages=(1.0,), kl_beta=0.1)
        with pytest.raises(ValueError, match="ref_log_ratio tokens"):
            GrpoStep(
                ratios=((1.0, 1.0),),
                advantages=(1.0,),
                ref_log_ratio=((0.0,),),
                kl_beta=0.1,
            )


class TestRunningRewardStats:
    def test_matches_numpy(self):
        rng = np.random.default_rng(42)
        values = rng.normal(5.0, 2.0, size=500)
        stats = RunningRewardStats()
        stats.update_many(values)
        assert stats.count == 500
        assert stats.mean == pytest.approx(float(np.mean(values)), abs=1e-10)
        assert stats.popstd == pytest.approx(float(np.std(values)), abs=1e-10)

    def test_incremental_equals_batch(self):
        a = RunningRewardStats()
        a.update_many([1.0, 2.0])
        a.update_many([3.0])
        b = RunningRewardStats()
        b.update_many([1.0, 2.0, 3.0])
        assert a.summary() == pytest.approx(b.summary())

    def test_single_value(self):
        stats = RunningRewardStats()
        stats.update(4.2)
        assert stats.summary() == {"mean": 4.2, "popstd": 0.0, "count": 1}

    def test_empty_raises(self):
        stats = RunningRewardStats()
        with pytest.raises(ValueError, match="no rewards"):
            stats.mean
        with pytest.raises(ValueError, match="no rewards"):
            stats.popstd

    def test_rejects_non_finite(self):
        stats = RunningRewardStats()
        with pytest.raises(ValueError, match="finite"):
            stats.update(math.inf)

    def test_reward_stats_helper(self):
        out = reward_stats([1.0, 2.0, 3.0])
        assert out["count"] == 3
        assert out["mean"] == pytest.approx(2.0)
        assert out["popstd"] == pytest.approx(math.sqrt(2.0 / 3.0))


class TestRescale:
    def test_endpoints_and_midpoint(self):
        assert rescale_to_unit(1.0) == 0.0
        assert rescale_to_unit(5.0) == 1.0
        assert rescale_to_unit(3.0) == 0.5

    def test_linear(self):
        rng = np.random.default_rng(42)
        s = rng.uniform(1, 5, size=100)
        assert_allclose([rescale_to_unit(v) for v in s], (s - 1) / 4, atol=1e-15)
