"""Fusion tests: pairwise loss/gradient, the fitter, and fused scoring."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from mosaiq.fusion import (
    FitConfig,
    TieMode,
    bt_gradient,
    bt_loss,
    fit_weights,
    fuse,
    fused_scores_for_pairs,
    prepare_pairs,
)
from mosaiq.model import (
    FusionWeights,
    PreferenceLabel,
    PreferencePair,
    ScoreVector,
)

A, B, TIE = PreferenceLabel.A, PreferenceLabel.B, PreferenceLabel.TIE


def _pair(pair_id, delta, label):
    """Pair whose score difference x_A - x_B equals delta (|d| <= 2)."""
    scores_a = ScoreVector(tuple(3.0 + d / 2.0 for d in delta))
    scores_b = ScoreVector(tuple(3.0 - d / 2.0 for d in delta))
    return PreferencePair(pair_id, f"{pair_id}-a", f"{pair_id}-b", scores_a, scores_b, label)


def _random_pairs(rng, n, w_true, flip=0.0):
    pairs = []
    for k in range(n):
        delta = rng.uniform(-2.0, 2.0, size=4)
        prefer_a = float(delta @ np.asarray(w_true)) > 0.0
        if flip and rng.random() < flip:
            prefer_a = not prefer_a
        pairs.append(_pair(f"p{k}", delta, A if prefer_a else B))
    return pairs


class TestPreparePairs:
    def test_deltas_and_targets(self):
        pairs = [
            _pair("p1", [1.0, 0.0, -0.5, 2.0], A),
            _pair("p2", [0.0, 1.0, 0.0, 0.0], B),
            _pair("p3", [0.5, 0.5, 0.5, 0.5], TIE),
        ]
        delta, y = prepare_pairs(pairs)
        assert delta.shape == (3, 4)
        assert_allclose(delta[0], [1.0, 0.0, -0.5, 2.0], atol=1e-12)
        assert_allclose(y, [1.0, 0.0, 0.5])

    def test_drop_mode_removes_ties(self):
        pairs = [_pair("p1", [1, 0, 0, 0], A), _pair("p2", [0, 1, 0, 0], TIE)]
        delta, y = prepare_pairs(pairs, TieMode.DROP)
        assert delta.shape == (1, 4)
        assert list(y) == [1.0]

    def test_all_ties_dropped_raises(self):
        pairs = [_pair("p1", [1, 0, 0, 0], TIE)]
        with pytest.raises(ValueError, match="no usable pairs"):
            prepare_pairs(pairs, TieMode.DROP)
        with pytest.raises(ValueError, match="no usable pairs"):
            prepare_pairs([])

    def test_tie_mode_parsing(self):
        assert TieMode.from_string("Soft_Half") is TieMode.SOFT_HALF
        assert TieMode.from_string("drop") is TieMode.DROP
        with pytest.raises(ValueError, match="unknown tie mode"):
            TieMode.from_string("ignore")


class TestLossAndGradient:
    def test_loss_at_zero_is_ln2(self):
        rng = np.random.default_rng(42)
        pairs = _random_pairs(rng, 17, [0.3, 0.3, 0.2, 0.2])
        assert bt_loss([0, 0, 0, 0], pairs) == pytest.approx(math.log(2), abs=1e-12)

    def test_hand_loss_single_pair(self):
        # delta = e1, w = [ln 3, 0, 0, 0]: sigma(z) = 3/4, loss = ln(4/3)
        pairs = [_pair("p1", [1.0, 0.0, 0.0, 0.0], A)]
        w = [math.log(3.0), 0.0, 0.0, 0.0]
        assert bt_loss(w, pairs) == pytest.approx(math.log(4.0 / 3.0), abs=1e-12)
        grad = bt_gradient(w, pairs)
        assert_allclose(grad, [-0.25, 0.0, 0.0, 0.0], atol=1e-12)

    def test_gradient_at_zero(self):
        pairs = [_pair("p1", [1.0, 0.0, 0.0, 0.0], A)]
        assert_allclose(bt_gradient([0, 0, 0, 0], pairs), [-0.5, 0, 0, 0], atol=1e-12)

    def test_tie_is_symmetric(self):
        delta = [1.0, -0.5, 0.25, 0.0]
        flipped = [-d for d in delta]
        w = [0.4, 0.1, 0.3, 0.2]
        loss_fwd = bt_loss(w, [_pair("p1", delta, TIE)])
        loss_rev = bt_loss(w, [_pair("p1", flipped, TIE)])
        assert loss_fwd == pytest.approx(loss_rev, rel=1e-12)

    def test_l2_adds_norm_penalty(self):
        pairs = [_pair("p1", [1.0, 0.0, 0.0, 0.0], A)]
        w = [0.5, -0.5, 0.25, 0.0]
        base = bt_loss(w, pairs)
        with_l2 = bt_loss(w, pairs, FitConfig(l2=0.1))
        penalty = 0.1 * sum(v * v for v in w)
        assert with_l2 == pytest.approx(base + penalty, rel=1e-12)

    def test_gradient_matches_central_differences(self):
        rng = np.random.default_rng(42)
        h = 1e-6
        for trial in range(10):
            pairs = _random_pairs(rng, 25, rng.uniform(-1, 1, size=4))
            # sprinkle in ties so the 0.5 target path is covered
            pairs[0] = _pair("t0", rng.uniform(-2, 2, size=4), TIE)
            config = FitConfig(l2=float(rng.uniform(0, 0.2)))
            w = rng.normal(0.0, 1.0, size=4)
            grad = bt_gradient(w, pairs, config)
            for i in range(4):
                e = np.zeros(4)
                e[i] = h
                fd = (bt_loss(w + e, pairs, config) - bt_loss(w - e, pairs, config)) / (2 * h)
                assert grad[i] == pytest.approx(fd, rel=1e-5, abs=1e-9)


class TestFitWeights:
    def test_already_optimal_init(self):
        # same delta labeled both ways: w = 0 is a stationary point
        pairs = [_pair("p1", [1, 1, 0, 0], A), _pair("p2", [1, 1, 0, 0], B)]
        result = fit_weights(pairs)
        assert result.converged
        assert result.iterations == 0
        assert result.weights.w == (0.0, 0.0, 0.0, 0.0)
        assert result.final_loss == pytest.approx(math.log(2), abs=1e-12)

    def test_loss_never_increases(self):
        rng = np.random.default_rng(42)
        pairs = _random_pairs(rng, 60, [0.5, 0.2, 0.2, 0.1], flip=0.2)
        result = fit_weights(pairs, FitConfig(max_iters=200))
        assert result.final_loss <= bt_loss([0, 0, 0, 0], pairs) + 1e-15
        assert result.pair_count_used == 60

    def test_regularized_fit_converges(self):
        rng = np.random.default_rng(42)
        pairs = _random_pairs(rng, 40, [0.4, 0.3, 0.2, 0.1], flip=0.1)
        config = FitConfig(l2=0.5)
        result = fit_weights(pairs, config)
        assert result.converged
        grad = bt_gradient(result.weights.w, pairs, config)
        assert float(np.max(np.abs(grad))) < config.grad_tol

    def test_recovers_weight_direction(self):
        rng = np.random.default_rng(42)
        w_true = np.array([0.2, 0.5, 0.2, 0.1])
        pairs = _random_pairs(rng, 400, w_true)
        result = fit_weights(pairs, FitConfig(max_iters=1500))
        w = np.array(result.weights.w)
        cosine = float(w @ w_true) / (np.linalg.norm(w) * np.linalg.norm(w_true))
        assert cosine >= 0.98

    def test_deterministic(self):
        rng = np.random.default_rng(42)
        pairs = _random_pairs(rng, 30, [0.3, 0.3, 0.3, 0.1], flip=0.1)
        first = fit_weights(pairs, FitConfig(max_iters=300))
        second = fit_weights(pairs, FitConfig(max_iters=300))
        assert first == second

    def test_drop_ties_changes_pair_count(self):
        rng = np.random.default_rng(42)
        pairs = _random_pairs(rng, 20, [0.4, 0.2, 0.2, 0.2])
        pairs.append(_pair("tie1", [0.3, 0.0, 0.0, 0.0], TIE))
        soft = fit_weights(pairs, FitConfig(max_iters=50))
        drop = fit_weights(pairs, FitConfig(max_iters=50, tie_mode=TieMode.DROP))
        assert soft.pair_count_used == 21
        assert drop.pair_count_used == 20
        assert drop.tie_mode is TieMode.DROP

    def test_result_serialization(self):
        pairs = [_pair("p1", [1, 0, 0, 0], A), _pair("p2", [1, 0, 0, 0], B)]
        row = fit_weights(pairs).to_dict()
        assert set(row) == {"w", "normalized_view", "meta"}
        assert set(row["meta"]) == {
            "pair_count_used",
            "final_loss",
            "tie_mode",
            "iterations",
            "converged",
        }
        assert row["meta"]["tie_mode"] == "soft_half"
        assert row["normalized_view"] is None  # fitted weights are all zero here

    def test_config_validation(self):
        with pytest.raises(ValueError):
            FitConfig(init=(0.0, 0.0))
        with pytest.raises(ValueError):
            FitConfig(max_iters=0)
        with pytest.raises(ValueError):
            FitConfig(grad_tol=0.0)
        with pytest.raises(ValueError):
            FitConfig(l2=-0.1)
        with pytest.raises(ValueError):
            FitConfig(shrink=1.0)


class TestFuse:
    WEIGHTS = FusionWeights((0.1, 0.5, 0.2, 0.2))

    def test_hand_value(self):
        assert fuse(ScoreVector((3.0, 4.0, 2.0, 5.0)), self.WEIGHTS) == pytest.approx(3.7)

    def test_accepts_mapping_and_sequence(self):
        by_name = {"layout": 3.0, "harmony": 4.0, "lighting": 2.0, "distortion": 5.0}
        assert fuse(by_name, self.WEIGHTS) == pytest.approx(3.7)
        assert fuse([3.0, 4.0, 2.0, 5.0], self.WEIGHTS) == pytest.approx(3.7)

    def test_wrong_length_rejected(self):
        with pytest.raises(ValueError, match="expected 4 scores"):
            fuse([3.0, 4.0, 2.0], self.WEIGHTS)

    def test_equal_weights_give_mean_like_scale(self):
        w = FusionWeights((0.25, 0.25, 0.25, 0.25))
        assert fuse([1.0, 1.0, 1.0, 1.0], w) == pytest.approx(1.0)
        assert fuse([5.0, 5.0, 5.0, 5.0], w) == pytest.approx(5.0)

    def test_fused_scores_for_pairs_covers_both_sides(self):
        pair = _pair("p1", [1.0, 0.0, 0.0, 0.0], A)
        scores = fused_scores_for_pairs([pair], self.WEIGHTS)
        assert set(scores) == {"p1-a", "p1-b"}
        assert scores["p1-a"] == pytest.approx(fuse(pair.scores_a, self.WEIGHTS))
        assert scores["p1-a"] - scores["p1-b"] == pytest.approx(0.1, abs=1e-12)
