"""Boxes, IoU, anchor generation, anchor matching, and box regression transforms.

Boxes live in continuous pixel coordinates, origin at the top-left corner,
x to the right and y down.  The canonical representation is center form
``(cx, cy, w, h)``; corner form ``(x1, y1, x2, y2)`` is derived on demand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .validation import check_boxes_array

__all__ = [
    "Box",
    "RegressionTarget",
    "AnchorConfig",
    "AnchorGrid",
    "MatchAssignment",
    "iou",
    "pairwise_iou",
    "generate_anchors",
    "encode",
    "decode",
    "encode_batch",
    "decode_batch",
    "clip_box",
    "match_anchors",
]

# Anchor label codes used by MatchAssignment.labels.
POSITIVE = 1
NEGATIVE = 0
IGNORE = -1


@dataclass(frozen=True)
class Box:
    """Axis-aligned rectangle in center form; width and height must be positive."""

    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise ValueError(f"box sides must be positive, got w={self.w}, h={self.h}")

    @property
    def corners(self) -> tuple[float, float, float, float]:
        """(x1, y1, x2, y2) with x1 < x2 and y1 < y2."""
        return (
            self.cx - self.w / 2,
            self.cy - self.h / 2,
            self.cx + self.w / 2,
            self.cy + self.h / 2,
        )

    @property
    def area(self) -> float:
        return self.w * self.h

    @classmethod
    def from_corners(cls, x1: float, y1: float, x2: float, y2: float) -> "Box":
        return cls((x1 + x2) / 2, (y1 + y2) / 2, x2 - x1, y2 - y1)

    def to_array(self) -> np.ndarray:
        return np.array([self.cx, self.cy, self.w, self.h], dtype=np.float64)


@dataclass(frozen=True)
class RegressionTarget:
    """Offsets between an anchor and a target box: center shifts scaled by the
    anchor size plus log-space width/height ratios."""

    tx: float
    ty: float
    tw: float
    th: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.tx, self.ty, self.tw, self.th)):
            raise ValueError("regression target must be finite")

    def to_array(self) -> np.ndarray:
        return np.array([self.tx, self.ty, self.tw, self.th], dtype=np.float64)


@dataclass(frozen=True)
class AnchorConfig:
    """Anchor layout: aspect ratios x scales replicated over pyramid levels.

    ``ratios`` are height/width aspect ratios; a ratio r produces an anchor of
    w = base * scale / sqrt(r) and h = base * scale * sqrt(r), so changing r
    reshapes the anchor at constant area.  ``levels`` is a list of
    (stride, base_size) pairs, finest first.
    """

    ratios: tuple[float, ...] = (1.0, 0.5, 2.0, 4.0)
    scales: tuple[float, ...] = (1.0, 2 ** 0.5, 2.0)
    levels: tuple[tuple[int, float], ...] = (
        (8, 32.0),
        (16, 64.0),
        (32, 128.0),
        (64, 256.0),
        (128, 512.0),
    )

    def __post_init__(self):
        if len(self.levels) == 0:
            raise ValueError("anchor config needs at least one pyramid level")
        if any(r <= 0 for r in self.ratios) or any(s <= 0 for s in self.scales):
            raise ValueError("ratios and scales must be positive")
        if any(stride < 1 or base <= 0 for stride, base in self.levels):
            raise ValueError("levels need stride >= 1 and base_size > 0")

    @property
    def anchors_per_location(self) -> int:
        return len(self.ratios) * len(self.scales)

    def location_sizes(self) -> np.ndarray:
        """(A, 2) array of (w, h) for one grid location, ratio-major order,
        for base_size 1; multiply by a level's base_size to materialize."""
        sizes = np.empty((self.anchors_per_location, 2), dtype=np.float64)
        i = 0
        for r in self.ratios:
            for s in self.scales:
                sizes[i, 0] = s / math.sqrt(r)
                sizes[i, 1] = s * math.sqrt(r)
                i += 1
        return sizes


@dataclass(frozen=True)
class AnchorGrid:
    """Materialized anchor set for one image size.

    ``anchors`` is an (N, 4) center-form array ordered level-major, then
    row-major over grid cells, then ratio x scale within a cell.
    ``level_offsets`` holds one (start, end) index range per pyramid level.
    """

    anchors: np.ndarray
    level_offsets: tuple[tuple[int, int], ...]
    config: AnchorConfig
    image_w: int
    image_h: int

    def __len__(self) -> int:
        return self.anchors.shape[0]

    def box(self, i: int) -> Box:
        cx, cy, w, h = self.anchors[i]
        return Box(cx, cy, w, h)


@dataclass
class MatchAssignment:
    """Per-anchor training assignment.

    ``labels`` holds POSITIVE / NEGATIVE / IGNORE codes, ``matched_gt`` the
    ground-truth index for positives (-1 elsewhere), and ``targets`` the
    encoded regression targets, valid only at positive rows.
    """

    labels: np.ndarray
    matched_gt: np.ndarray
    targets: np.ndarray

    positive: int = field(default=POSITIVE, repr=False)
    negative: int = field(default=NEGATIVE, repr=False)
    ignore: int = field(default=IGNORE, repr=False)

    @property
    def num_positives(self) -> int:
        return int(np.sum(self.labels == POSITIVE))

    @property
    def positive_indices(self) -> np.ndarray:
        return np.flatnonzero(self.labels == POSITIVE)

    @property
    def negative_indices(self) -> np.ndarray:
        return np.flatnonzero(self.labels == NEGATIVE)


def iou(a: Box, b: Box) -> float:
    """Intersection-over-union of two boxes under the continuous area model."""
    ax1, ay1, ax2, ay2 = a.corners
    bx1, by1, bx2, by2 = b.corners
    iw = min(ax2, bx2) - max(ax1, bx1)
    ih = min(ay2, by2) - max(ay1, by1)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    # areas from the same corner values keep identical boxes at exactly 1.0
    union = (ax2 - ax1) * (ay2 - ay1) + (bx2 - bx1) * (by2 - by1) - inter
    return inter / union


def pairwise_iou(boxes_a: np.ndarray, boxes_b: np.ndarray) -> np.ndarray:
    """IoU matrix between two (N, 4) / (M, 4) center-form box arrays."""
    a = np.asarray(boxes_a, dtype=np.float64).reshape(-1, 4)
    b = np.asarray(boxes_b, dtype=np.float64).reshape(-1, 4)
    if a.shape[0] == 0 or b.shape[0] == 0:
        return np.zeros((a.shape[0], b.shape[0]))
    ax1 = a[:, 0] - a[:, 2] / 2
    ay1 = a[:, 1] - a[:, 3] / 2
    ax2 = a[:, 0] + a[:, 2] / 2
    ay2 = a[:, 1] + a[:, 3] / 2
    bx1 = b[:, 0] - b[:, 2] / 2
    by1 = b[:, 1] - b[:, 3] / 2
    bx2 = b[:, 0] + b[:, 2] / 2
    by2 = b[:, 1] + b[:, 3] / 2
    iw = np.minimum(ax2[:, None], bx2[None, :]) - np.maximum(ax1[:, None], bx1[None, :])
    ih = np.minimum(ay2[:, None], by2[None, :]) - np.maximum(ay1[:, None], by1[None, :])
    inter = np.clip(iw, 0, None) * np.clip(ih, 0, None)
    area_a = (ax2 - ax1) * (ay2 - ay1)
    area_b = (bx2 - bx1) * (by2 - by1)
    union = area_a[:, None] + area_b[None, :] - inter
    return inter / union


def generate_anchors(cfg: AnchorConfig, image_w: int, image_h: int) -> AnchorGrid:
    """Tile anchors over every pyramid level of an image.

    Each level with stride s contributes a ceil(H/s) x ceil(W/s) grid of
    locations centered at ((i + 0.5) * s, (j + 0.5) * s); every location holds
    the same ratio x scale family of (w, h) pairs, so the layout is
    translation invariant by construction.
    """
    if image_w < 1 or image_h < 1:
        raise ValueError("image size must be positive")
    per_level = []
    offsets = []
    start = 0
    unit_sizes = cfg.location_sizes()
    for stride, base in cfg.levels:
        nx = math.ceil(image_w / stride)
        ny = math.ceil(image_h / stride)
        cx = (np.arange(nx) + 0.5) * stride
        cy = (np.arange(ny) + 0.5) * stride
        sizes = unit_sizes * base  # (A, 2)
        a = sizes.shape[0]
        block = np.empty((ny, nx, a, 4), dtype=np.float64)
        block[..., 0] = cx[None, :, None]
        block[..., 1] = cy[:, None, None]
        block[..., 2] = sizes[None, None, :, 0]
        block[..., 3] = sizes[None, None, :, 1]
        block = block.reshape(-1, 4)
        per_level.append(block)
        offsets.append((start, start + block.shape[0]))
        start += block.shape[0]
    anchors = np.concatenate(per_level, axis=0)
    anchors.setflags(write=False)
    return AnchorGrid(anchors, tuple(offsets), cfg, image_w, image_h)


def encode(gt: Box, anchor: Box) -> RegressionTarget:
    """Express a target box relative to an anchor: center offsets divided by
    the anchor's width/height, size as log ratios."""
    return RegressionTarget(
        tx=(gt.cx - anchor.cx) / anchor.w,
        ty=(gt.cy - anchor.cy) / anchor.h,
        tw=math.log(gt.w / anchor.w),
        th=math.log(gt.h / anchor.h),
    )


def decode(t: RegressionTarget, anchor: Box) -> Box:
    """Inverse of :func:`encode`."""
    return Box(
        cx=anchor.cx + t.tx * anchor.w,
        cy=anchor.cy + t.ty * anchor.h,
        w=anchor.w * math.exp(t.tw),
        h=anchor.h * math.exp(t.th),
    )


def encode_batch(gts: np.ndarray, anchors: np.ndarray) -> np.ndarray:
    """Row-wise :func:`encode` on (N, 4) center-form arrays."""
    gts = np.asarray(gts, dtype=np.float64)
    anchors = np.asarray(anchors, dtype=np.float64)
    out = np.empty_like(gts)
    out[..., 0] = (gts[..., 0] - anchors[..., 0]) / anchors[..., 2]
    out[..., 1] = (gts[..., 1] - anchors[..., 1]) / anchors[..., 3]
    out[..., 2] = np.log(gts[..., 2] / anchors[..., 2])
    out[..., 3] = np.log(gts[..., 3] / anchors[..., 3])
    return out


def decode_batch(targets: np.ndarray, anchors: np.ndarray) -> np.ndarray:
    """Row-wise :func:`decode` on (N, 4) arrays."""
    targets = np.asarray(targets, dtype=np.float64)
    anchors = np.asarray(anchors, dtype=np.float64)
    out = np.empty_like(targets)
    out[..., 0] = anchors[..., 0] + targets[..., 0] * anchors[..., 2]
    out[..., 1] = anchors[..., 1] + targets[..., 1] * anchors[..., 3]
    out[..., 2] = anchors[..., 2] * np.exp(targets[..., 2])
    out[..., 3] = anchors[..., 3] * np.exp(targets[..., 3])
    return out


def clip_box(b: Box, image_w: float, image_h: float) -> Box:
    """Clamp a box to the image rectangle.

    Raises ValueError when the box has no overlap with the image at all.
    """
    x1, y1, x2, y2 = b.corners
    cx1 = min(max(x1, 0.0), image_w)
    cy1 = min(max(y1, 0.0), image_h)
    cx2 = min(max(x2, 0.0), image_w)
    cy2 = min(max(y2, 0.0), image_h)
    if cx2 - cx1 <= 0 or cy2 - cy1 <= 0:
        raise ValueError(f"box {b} lies entirely outside the {image_w}x{image_h} image")
    return Box.from_corners(cx1, cy1, cx2, cy2)


def match_anchors(
    grid: AnchorGrid,
    gts,
    pos_thr: float = 0.5,
    neg_thr: float = 0.4,
) -> MatchAssignment:
    """Assign every anchor a positive / negative / ignore label.

    Anchors with IoU >= pos_thr against their best ground truth are positive,
    anchors below neg_thr are negative, the band in between is ignored.  Each
    ground truth additionally forces its own argmax-IoU anchor positive so no
    target is left unmatched.  Positives carry encoded regression targets.

    When two ground truths share the same argmax anchor (identical boxes), the
    one with higher IoU keeps it and the other may end up without a positive.
    """
    if not (0 <= neg_thr <= pos_thr <= 1):
        raise ValueError("need 0 <= neg_thr <= pos_thr <= 1")
    if isinstance(gts, np.ndarray):
        gt_arr = check_boxes_array(gts, "gts")
    else:
        gt_arr = np.array([g.to_array() for g in gts], dtype=np.float64).reshape(-1, 4)
    n = len(grid)
    labels = np.full(n, NEGATIVE, dtype=np.int8)
    matched = np.full(n, -1, dtype=np.int64)
    targets = np.zeros((n, 4), dtype=np.float64)
    if gt_arr.shape[0] == 0:
        return MatchAssignment(labels, matched, targets)

    ious = pairwise_iou(grid.anchors, gt_arr)  # (n_anchors, n_gts)
    best_gt = np.argmax(ious, axis=1)
    best_iou = ious[np.arange(n), best_gt]

    labels[best_iou >= pos_thr] = POSITIVE
    labels[(best_iou >= neg_thr) & (best_iou < pos_thr)] = IGNORE
    matched[labels == POSITIVE] = best_gt[labels == POSITIVE]

    # Forced best-match: every gt claims its argmax anchor, best IoU wins ties.
    for j in range(gt_arr.shape[0]):
        i = int(np.argmax(ious[:, j]))
        if labels[i] == POSITIVE and ious[i, matched[i]] > ious[i, j]:
            continue
        labels[i] = POSITIVE
        matched[i] = j

    pos = labels == POSITIVE
    targets[pos] = encode_batch(gt_arr[matched[pos]], grid.anchors[pos])
    return MatchAssignment(labels, matched, targets)
