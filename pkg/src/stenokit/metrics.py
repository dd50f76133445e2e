"""Detection and classification evaluation.

The detection protocol: keep the top-scoring detections (at most ``max_dets``
with score >= ``score_thr``), match each one greedily in score order to the
highest-IoU still-unmatched ground truth with IoU strictly above ``iou_thr``.
Recall and precision are micro-averaged over frames; the at-least-one rate is
the fraction of sequences whose reference frame got at least one true
positive.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .geometry import Box, pairwise_iou
from .inference import Detection
from .validation import check_probability_rows

__all__ = [
    "EvalParams",
    "FrameEval",
    "MetricsReport",
    "ClassificationReport",
    "match_detections",
    "aggregate",
    "summarize_folds",
    "classification_metrics",
]


@dataclass(frozen=True)
class EvalParams:
    """Thresholds of the evaluation protocol."""

    iou_thr: float = 0.2
    score_thr: float = 0.5
    max_dets: int = 5


@dataclass(frozen=True)
class FrameEval:
    """Counts and matched (detection index, ground-truth index) pairs for one frame."""

    tp: int
    fp: int
    fn: int
    matches: tuple[tuple[int, int], ...] = ()


@dataclass(frozen=True)
class MetricsReport:
    """Micro-averaged detection metrics; a ratio is None when its denominator is zero."""

    recall: float | None
    precision: float | None
    at_least_one: float | None
    total_tp: int = 0
    total_fp: int = 0
    total_fn: int = 0
    num_sequences: int = 0


@dataclass(frozen=True)
class ClassificationReport:
    accuracy: float
    macro_f1: float
    cross_entropy: float


def match_detections(dets: Sequence[Detection], gts, p: EvalParams = EvalParams()) -> FrameEval:
    """Score one frame's detections against its ground-truth boxes."""
    if isinstance(gts, np.ndarray):
        gt_arr = np.asarray(gts, dtype=np.float64).reshape(-1, 4)
    else:
        gt_arr = np.array([g.to_array() for g in gts], dtype=np.float64).reshape(-1, 4)
    n_gt = gt_arr.shape[0]

    scores = np.array([d.score for d in dets], dtype=np.float64)
    eligible = np.flatnonzero(scores >= p.score_thr)
    order = eligible[np.argsort(-scores[eligible], kind="stable")][: p.max_dets]
    if order.size == 0:
        return FrameEval(tp=0, fp=0, fn=n_gt)
    if n_gt == 0:
        return FrameEval(tp=0, fp=int(order.size), fn=0)

    det_boxes = np.array([dets[i].box.to_array() for i in order])
    ious = pairwise_iou(det_boxes, gt_arr)

    taken = np.zeros(n_gt, dtype=bool)
    matches = []
    for row, det_idx in enumerate(order):
        cand = np.where(taken, -np.inf, ious[row])
        j = int(np.argmax(cand))
        if cand[j] > p.iou_thr:
            taken[j] = True
            matches.append((int(det_idx), j))
    tp = len(matches)
    return FrameEval(tp=tp, fp=int(order.size) - tp, fn=n_gt - tp, matches=tuple(matches))


def aggregate(
    frames: Sequence[FrameEval],
    sequence_ids: Sequence[str],
    is_reference: Sequence[bool],
) -> MetricsReport:
    """Micro-average frame evaluations and compute the per-sequence at-least-one rate."""
    if len(frames) == 0:
        raise ValueError("cannot aggregate an empty evaluation")
    if not (len(frames) == len(sequence_ids) == len(is_reference)):
        raise ValueError("frames, sequence_ids, and is_reference must align")

    tp = sum(f.tp for f in frames)
    fp = sum(f.fp for f in frames)
    fn = sum(f.fn for f in frames)

    seq_hit: dict[str, bool] = {}
    for f, sid, ref in zip(frames, sequence_ids, is_reference):
        seq_hit.setdefault(sid, False)
        if ref and f.tp >= 1:
            seq_hit[sid] = True

    recall = tp / (tp + fn) if (tp + fn) > 0 else None
    precision = tp / (tp + fp) if (tp + fp) > 0 else None
    at_least_one = sum(seq_hit.values()) / len(seq_hit) if seq_hit else None
    return MetricsReport(
        recall=recall,
        precision=precision,
        at_least_one=at_least_one,
        total_tp=tp,
        total_fp=fp,
        total_fn=fn,
        num_sequences=len(seq_hit),
    )


def summarize_folds(reports: Sequence[MetricsReport]) -> dict:
    """Mean and std of each defined metric across cross-validation folds."""
    if not reports:
        raise ValueError("no fold reports to summarize")
    out = {}
    for name in ("recall", "precision", "at_least_one"):
        vals = [getattr(r, name) for r in reports if getattr(r, name) is not None]
        if vals:
            out[name] = {"mean": float(np.mean(vals)), "std": float(np.std(vals))}
        else:
            out[name] = None
    return out


def classification_metrics(pred_probs, labels) -> ClassificationReport:
    """Accuracy, macro F1, and mean cross-entropy of class-probability predictions.

    Macro F1 averages per-class F1 over the classes present in the labels,
    counting an undefined per-class F1 (no predictions and no occurrences)
    as zero.
    """
    probs = check_probability_rows(pred_probs, "pred_probs")
    y = np.asarray(labels)
    if y.shape[0] != probs.shape[0]:
        raise ValueError("pred_probs and labels must have the same length")
    k = probs.shape[1]
    if np.any(y < 0) or np.any(y >= k):
        raise ValueError(f"labels must be class ids in [0, {k})")

    pred = np.argmax(probs, axis=1)
    accuracy = float(np.mean(pred == y))

    f1s = []
    for c in np.unique(y):
        tp = np.sum((pred == c) & (y == c))
        fp = np.sum((pred == c) & (y != c))
        fn = np.sum((pred != c) & (y == c))
        denom = 2 * tp + fp + fn
        f1s.append(2 * tp / denom if denom > 0 else 0.0)
    macro_f1 = float(np.mean(f1s))

    p_true = np.clip(probs[np.arange(len(y)), y], 1e-12, None)
    cross_entropy = float(-np.mean(np.log(p_true)))
    return ClassificationReport(accuracy=accuracy, macro_f1=macro_f1, cross_entropy=cross_entropy)
