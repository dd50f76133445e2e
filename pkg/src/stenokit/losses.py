"""Detection losses with analytic gradients.

Focal classification loss, smooth-L1 box regression loss, and the combined
per-image detection loss with an L2 weight penalty.  Everything here is pure
numpy and returns gradients alongside values so the training code never needs
numeric differentiation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import MatchAssignment

__all__ = [
    "FocalParams",
    "LossReport",
    "focal_loss",
    "smooth_l1",
    "detection_loss",
    "detection_loss_with_grads",
]

# Probabilities are clamped into [EPS, 1 - EPS] before any log.
EPS = 1e-7


@dataclass(frozen=True)
class FocalParams:
    """Weighting of the focal classification loss.

    ``alpha`` balances foreground vs background; ``gamma`` focuses the loss on
    hard examples.  alpha applies to positive labels and (1 - alpha) to
    negative ones.
    """

    alpha: float = 0.25
    gamma: float = 2.0

    def __post_init__(self):
        if not (0 < self.alpha <= 1):
            raise ValueError("alpha must be in (0, 1]")
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")


@dataclass(frozen=True)
class LossReport:
    """Breakdown of one detection-loss evaluation."""

    cls_loss: float
    reg_loss: float
    l2_penalty: float
    total: float
    normalizer: int

    def __post_init__(self):
        for name, v in (("cls_loss", self.cls_loss), ("reg_loss", self.reg_loss),
        ("l2_penalty", self.l2_penalty), ("total", self.total)):
            if not np.isfinite(v):
                raise ValueError(f"{name} is not finite: {v}")


def focal_loss(p, y, params: FocalParams = FocalParams()):
    """Focal loss and its derivative with respect to the probability.

    For a foreground label the loss is -alpha * (1 - p)^gamma * log(p); for a
    background label p is mirrored to 1 - p and alpha to 1 - alpha.  Inputs
    are clamped to [EPS, 1 - EPS], so the returned gradient is the gradient of
    the clamped function (zero outside the clamp region).

    Accepts scalars or arrays; returns (loss, dloss_dp) of the input shape.
    """
    p = np.asarray(p, dtype=np.float64)
    y = np.asarray(y)
    scalar = p.ndim == 0
    p = np.atleast_1d(p)
    y = np.atleast_1d(y)
    inside = (p > EPS) & (p < 1 - EPS)
    pc = np.clip(p, EPS, 1 - EPS)

    pos = y == 1
    pt = np.where(pos, pc, 1 - pc)
    at = np.where(pos, params.alpha, 1 - params.alpha)
    g = params.gamma

    one_minus_pt = 1 - pt
    log_pt = np.log(pt)
    loss = -at * one_minus_pt**g * log_pt

    # d/dpt of -at (1-pt)^g log(pt); the g==0 branch avoids 0 * inf at pt -> 1.
    if g == 0:
        dloss_dpt = -at / pt
    else:
        dloss_dpt = at * (g * one_minus_pt ** (g - 1) * log_pt - one_minus_pt**g / pt)
    dpt_dp = np.where(pos, 1.0, -1.0)
    grad = np.where(inside, dloss_dpt * dpt_dp, 0.0)

    if scalar:
        return float(loss[0]), float(grad[0])
    return loss, grad


def smooth_l1(x):
    """Smooth-L1 (Huber at delta=1) loss and gradient for residuals.

    0.5 x^2 for |x| < 1, |x| - 0.5 otherwise; continuous with continuous
    derivative at |x| = 1.  Accepts scalars or arrays.
    """
    x = np.asarray(x, dtype=np.float64)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    small = np.abs(x) < 1
    loss = np.where(small, 0.5 * x * x, np.abs(x) - 0.5)
    grad = np.where(small, x, np.sign(x))
    if scalar:
        return float(loss[0]), float(grad[0])
    return loss, grad


def detection_loss(
    cls_probs: np.ndarray,
    assignment: MatchAssignment,
    reg_preds: np.ndarray,
    params: FocalParams = FocalParams(),
    l2_lambda: float = 0.0,
    weights: np.ndarray | None = None,
) -> LossReport:
    """Combined detection loss for one image.

    Classification: focal loss summed over positive and negative anchors
    (ignored anchors excluded), divided by max(1, number of positives).
    Regression: smooth-L1 over the four target coordinates of positive
    anchors, same normalizer.  L2: l2_lambda * sum(weights^2).
    """
    report, _, _, _ = detection_loss_with_grads(
        cls_probs, assignment, reg_preds, params, l2_lambda, weights
    )
    return report


def detection_loss_with_grads(
    cls_probs: np.ndarray,
    assignment: MatchAssignment,
    reg_preds: np.ndarray,
    params: FocalParams = FocalParams(),
    l2_lambda: float = 0.0,
    weights: np.ndarray | None = None,
):
    """Like :func:`detection_loss` but also returns analytic gradients.

    Returns (report, dtotal_dprobs, dtotal_dreg, dtotal_dweights); gradient
    arrays match the shapes of cls_probs, reg_preds, and weights.
    """
    cls_probs = np.asarray(cls_probs, dtype=np.float64)
    reg_preds = np.asarray(reg_preds, dtype=np.float64)
    n = assignment.labels.shape[0]
    if cls_probs.shape[0] != n or reg_preds.shape[0] != n:
        raise ValueError(
            f"anchor count mismatch: assignment has {n}, "
            f"probs {cls_probs.shape[0]}, regression {reg_preds.shape[0]}"
        )

    pos = assignment.positive_indices
    neg = assignment.negative_indices
    norm = max(1, pos.size)

    dprobs = np.zeros_like(cls_probs)
    used = np.concatenate([pos, neg])
    labels01 = np.concatenate([np.ones(pos.size), np.zeros(neg.size)])
    if used.size:
        fl, dfl = focal_loss(cls_probs[used], labels01, params)
        cls_loss = float(np.sum(fl)) / norm
        dprobs[used] = dfl / norm
    else:
        cls_loss = 0.0

    dreg = np.zeros_like(reg_preds)
    if pos.size:
        residual = reg_preds[pos] - assignment.targets[pos]
        sl, dsl = smooth_l1(residual)
        reg_loss = float(np.sum(sl)) / norm
        dreg[pos] = dsl / norm
    else:
        reg_loss = 0.0

    if weights is not None and l2_lambda:
        w = np.asarray(weights, dtype=np.float64)
        l2 = float(l2_lambda * np.sum(w * w))
        dweights = 2.0 * l2_lambda * w
    else:
        l2 = 0.0
        dweights = np.zeros_like(weights) if weights is not None else None

    report = LossReport(
        cls_loss=cls_loss,
        reg_loss=reg_loss,
        l2_penalty=l2,
        total=cls_loss + reg_loss + l2,
        normalizer=int(pos.size),
    )
    return report, dprobs, dreg, dweights
