"""Turn raw per-anchor scores and offsets into final detections."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import AnchorGrid, Box, clip_box, decode_batch, pairwise_iou

__all__ = ["Detection", "NmsParams", "nms", "infer"]


@dataclass(frozen=True)
class Detection:
    """One scored box."""

    box: Box
    score: float

    def __post_init__(self):
        if not (0 <= self.score <= 1):
            raise ValueError(f"score must be in [0, 1], got {self.score}")


@dataclass(frozen=True)
class NmsParams:
    """Score threshold, overlap threshold, and output cap for suppression."""

    score_thr: float = 0.5
    iou_thr: float = 0.5
    max_out: int = 5


def nms(dets: list[Detection], p: NmsParams = NmsParams()) -> list[Detection]:
    """Greedy non-maximum suppression.

    Keeps detections in descending score order (ties broken by input order),
    dropping any candidate whose IoU with an already kept box exceeds
    ``iou_thr``.  Detections below ``score_thr`` are discarded up front and at
    most ``max_out`` survivors are returned.
    """
    if not dets:
        return []
    scores = np.array([d.score for d in dets])
    keep_mask = scores >= p.score_thr
    idx = np.flatnonzero(keep_mask)
    if idx.size == 0:
        return []
    order = idx[np.argsort(-scores[idx], kind="stable")]
    boxes = np.array([dets[i].box.to_array() for i in order])
    ious = pairwise_iou(boxes, boxes)

    kept: list[int] = []
    for row in range(order.size):
        if len(kept) >= p.max_out:
            break
        if all(ious[row, k] <= p.iou_thr for k in kept):
            kept.append(row)
    return [dets[order[k]] for k in kept]


def infer(
    cls_probs: np.ndarray,
    reg_preds: np.ndarray,
    grid: AnchorGrid,
    image_w: int,
    image_h: int,
    p: NmsParams = NmsParams(),
) -> list[Detection]:
    """Decode per-anchor outputs into suppressed detections.

    Anchors scoring at or above ``score_thr`` are decoded against the grid,
    clipped to the image (boxes falling entirely outside are dropped), and
    passed through :func:`nms`.
    """
    cls_probs = np.asarray(cls_probs, dtype=np.float64)
    reg_preds = np.asarray(reg_preds, dtype=np.float64)
    n = len(grid)
    if cls_probs.shape != (n,) or reg_preds.shape != (n, 4):
        raise ValueError(
            f"expected probs ({n},) and regression ({n}, 4), "
            f"got {cls_probs.shape} and {reg_preds.shape}"
        )
    sel = np.flatnonzero(cls_probs >= p.score_thr)
    if sel.size == 0:
        return []
    decoded = decode_batch(reg_preds[sel], grid.anchors[sel])
    candidates = []
    for row, i in enumerate(sel):
        cx, cy, w, h = decoded[row]
        try:
            box = clip_box(Box(cx, cy, w, h), image_w, image_h)
        except ValueError:
            continue
        candidates.append(Detection(box=box, score=float(cls_probs[i])))
    return nms(candidates, p)
