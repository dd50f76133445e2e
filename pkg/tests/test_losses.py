import math

import numpy as np
import pytest

from stenokit.geometry import MatchAssignment
from stenokit.losses import (
    EPS,
    FocalParams,
    detection_loss,
    detection_loss_with_grads,
    focal_loss,
    smooth_l1,
)


def central_diff(f, x, step=1e-5):
    return (f(x + step) - f(x - step)) / (2 * step)


def make_assignment(labels, targets=None):
    labels = np.asarray(labels, dtype=np.int8)
    n = labels.shape[0]
    t = np.zeros((n, 4)) if targets is None else np.asarray(targets, dtype=np.float64)
    matched = np.where(labels == 1, 0, -1)
    return MatchAssignment(labels=labels, matched_gt=matched, targets=t)


class TestFocalLoss:
    def test_perfect_prediction_vanishes(self):
        loss, _ = focal_loss(1 - EPS, 1)
        assert loss == pytest.approx(0.0, abs=1e-12)

    def test_reduces_to_cross_entropy(self):
        # gamma=0 and alpha_t=1 for a positive label
        loss, _ = focal_loss(0.5, 1, FocalParams(alpha=1.0, gamma=0.0))
        assert loss == pytest.approx(math.log(2))

    def test_reference_value(self):
        loss, _ = focal_loss(0.9, 1, FocalParams(alpha=0.25, gamma=2.0))
        assert loss == pytest.approx(0.25 * 0.1**2 * -math.log(0.9), rel=1e-12)
        assert loss == pytest.approx(2.634e-4, abs=1e-7)

    @pytest.mark.parametrize("y", [0, 1])
    @pytest.mark.parametrize("params", [FocalParams(), FocalParams(0.5, 0.0), FocalParams(0.9, 3.0)])
    def test_gradient_matches_finite_differences(self, y, params):
        for p in np.linspace(0.02, 0.98, 25):
            _, grad = focal_loss(p, y, params)
            num = central_diff(lambda q: focal_loss(q, y, params)[0], p)
            assert grad == pytest.approx(num, rel=1e-5, abs=1e-9)

    def test_monotone_decreasing_in_pt(self):
        ps = np.linspace(0.01, 0.99, 99)
        losses, _ = focal_loss(ps, np.ones_like(ps))
        assert np.all(np.diff(losses) < 0)

    def test_bounded_by_cross_entropy(self):
        ps = np.linspace(0.01, 0.99, 99)
        fl, _ = focal_loss(ps, np.ones_like(ps), FocalParams(alpha=1.0, gamma=2.0))
        ce = -np.log(ps)
        assert np.all(fl <= ce + 1e-15)

    def test_nonnegative(self):
        rng = np.random.default_rng(0)
        ps = rng.uniform(0, 1, 500)
        ys = rng.integers(0, 2, 500)
        losses, _ = focal_loss(ps, ys)
        assert np.all(losses >= 0)


class TestSmoothL1:
    @pytest.mark.parametrize("x,expected", [(0.0, 0.0), (0.5, 0.125), (2.0, 1.5), (-2.0, 1.5)])
    def test_values(self, x, expected):
        loss, _ = smooth_l1(x)
        assert loss == pytest.approx(expected)

    def test_continuous_at_one(self):
        lo, _ = smooth_l1(1 - 1e-9)
        hi, _ = smooth_l1(1 + 1e-9)
        assert lo == pytest.approx(hi, abs=1e-8)
        assert lo == pytest.approx(0.5, abs=1e-8)

    def test_gradient_matches_finite_differences(self):
        for x in np.linspace(-3, 3, 61):
            if abs(abs(x) - 1) < 1e-3:
                continue  # kink neighborhood of the finite-difference stencil
            _, grad = smooth_l1(x)
            num = central_diff(lambda v: smooth_l1(v)[0], x)
            assert grad == pytest.approx(num, rel=1e-5, abs=1e-9)


class TestDetectionLoss:
    def test_no_positives_confident_negatives(self):
        assignment = make_assignment([0, 0, 0])
        probs = np.full(3, EPS)
        report = detection_loss(probs, assignment, np.zeros((3, 4)))
        assert report.cls_loss == pytest.approx(0.0, abs=1e-12)
        assert report.reg_loss == 0.0
        assert report.normalizer == 0

    def test_single_perfect_positive_leaves_l2_only(self):
        assignment = make_assignment([1], targets=[[0.1, -0.2, 0.0, 0.3]])
        probs = np.array([1 - EPS])
        preds = np.array([[0.1, -0.2, 0.0, 0.3]])
        w = np.array([1.0, -2.0])
        report = detection_loss(probs, assignment, preds, l2_lambda=4e-4, weights=w)
        assert report.l2_penalty == pytest.approx(4e-4 * 5.0)
        assert report.total == pytest.approx(report.l2_penalty, abs=1e-12)

    def test_two_anchor_value(self):
        # One positive at p=0.9 and one negative at p=0.1.  Direct evaluation:
        # positive: 0.25 * 0.1^2 * -ln(0.9); negative mirrors to p_t=0.9 with
        # weight 1 - alpha = 0.75, i.e. three times the positive term.
        assignment = make_assignment([1, 0])
        probs = np.array([0.9, 0.1])
        report = detection_loss(probs, assignment, np.zeros((2, 4)))
        pos_term = 0.25 * 0.1**2 * -math.log(0.9)
        neg_term = 0.75 * 0.1**2 * -math.log(0.9)
        assert report.cls_loss == pytest.approx(pos_term + neg_term, rel=1e-12)
        assert report.total == pytest.approx(report.cls_loss + report.reg_loss)

    def test_ignore_band_excluded(self):
        assignment = make_assignment([1, -1])
        probs = np.array([0.9, 0.5])
        with_ignore = detection_loss(probs, assignment, np.zeros((2, 4)))
        alone = detection_loss(
            np.array([0.9]), make_assignment([1]), np.zeros((1, 4))
        )
        assert with_ignore.cls_loss == pytest.approx(alone.cls_loss)

    def test_normalized_by_positive_count(self):
        assignment = make_assignment([1, 1, 0, 0])
        probs = np.array([0.7, 0.7, 0.2, 0.2])
        preds = np.zeros((4, 4))
        preds[:2] = 0.5
        report = detection_loss(probs, assignment, preds)
        fl_pos, _ = focal_loss(0.7, 1)
        fl_neg, _ = focal_loss(0.2, 0)
        assert report.cls_loss == pytest.approx((2 * fl_pos + 2 * fl_neg) / 2)
        assert report.reg_loss == pytest.approx(2 * 4 * 0.5 * 0.25 / 2)
        assert report.normalizer == 2

    def test_length_mismatch_rejected(self):
        assignment = make_assignment([1, 0])
        with pytest.raises(ValueError):
            detection_loss(np.array([0.5]), assignment, np.zeros((2, 4)))

    def test_permutation_invariance(self):
        rng = np.random.default_rng(9)
        labels = np.array([1, 0, 0, -1, 1, 0], dtype=np.int8)
        targets = rng.normal(size=(6, 4))
        probs = rng.uniform(0.05, 0.95, 6)
        preds = rng.normal(size=(6, 4))
        base = detection_loss(probs, make_assignment(labels, targets), preds)
        for _ in range(10):
            perm = rng.permutation(6)
            permuted = detection_loss(
                probs[perm], make_assignment(labels[perm], targets[perm]), preds[perm]
            )
            assert permuted.total == pytest.approx(base.total, rel=1e-12)

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(4)
        labels = np.array([1, 0, -1, 1, 0], dtype=np.int8)
        targets = rng.normal(scale=0.5, size=(5, 4))
        probs = rng.uniform(0.1, 0.9, 5)
        preds = rng.normal(scale=0.5, size=(5, 4))
        weights = rng.normal(size=7)
        assignment = make_assignment(labels, targets)

        def total(pr, pd, w):
            return detection_loss(pr, assignment, pd, l2_lambda=4e-4, weights=w).total

        _, dprobs, dreg, dw = detection_loss_with_grads(
            probs, assignment, preds, l2_lambda=4e-4, weights=weights
        )
        step = 1e-5
        for i in range(5):
            q = probs.copy()
            q[i] += step
            hi = total(q, preds, weights)
            q[i] -= 2 * step
            lo = total(q, preds, weights)
            assert dprobs[i] == pytest.approx((hi - lo) / (2 * step), rel=1e-5, abs=1e-9)
        for i in range(5):
            for j in range(4):
                q = preds.copy()
                q[i, j] += step
                hi = total(probs, q, weights)
                q[i, j] -= 2 * step
                lo = total(probs, q, weights)
                assert dreg[i, j] == pytest.approx((hi - lo) / (2 * step), rel=1e-5, abs=1e-9)
        for i in range(7):
            q = weights.copy()
            q[i] += step
            hi = total(probs, preds, q)
            q[i] -= 2 * step
            lo = total(probs, preds, q)
            assert dw[i] == pytest.approx((hi - lo) / (2 * step), rel=1e-5, abs=1e-9)
