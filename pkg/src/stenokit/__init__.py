"""Coronary angiography stenosis detection toolkit.

Anchor-based lesion detection and viewing-angle classification at desk
scale, correlation-filter propagation of reference-frame annotations with a
human-in-the-loop review service, plus the evaluation protocol for both
tasks.
"""

from .geometry import (
    AnchorConfig,
    AnchorGrid,
    Box,
    MatchAssignment,
    RegressionTarget,
    clip_box,
    decode,
    encode,
    generate_anchors,
    iou,
    match_anchors,
    pairwise_iou,
)
from .losses import FocalParams, LossReport, detection_loss, focal_loss, smooth_l1
from .inference import Detection, NmsParams, infer, nms
from .metrics import (
    ClassificationReport,
    EvalParams,
    FrameEval,
    MetricsReport,
    aggregate,
    classification_metrics,
    match_detections,
    summarize_folds,
)
from .tracking import CorrelationTracker, TrackerParams, TrackResult, propagate
from .estimators import StenosisDetector, ViewClassifier

__version__ = "0.1.0"

__all__ = [
    "AnchorConfig",
    "AnchorGrid",
    "Box",
    "MatchAssignment",
    "RegressionTarget",
    "clip_box",
    "decode",
    "encode",
    "generate_anchors",
    "iou",
    "match_anchors",
    "pairwise_iou",
    "FocalParams",
    "LossReport",
    "detection_loss",
    "focal_loss",
    "smooth_l1",
    "Detection",
    "NmsParams",
    "infer",
    "nms",
    "ClassificationReport",
    "EvalParams",
    "FrameEval",
    "MetricsReport",
    "aggregate",
    "classification_metrics",
    "match_detections",
    "summarize_folds",
    "CorrelationTracker",
    "TrackerParams",
    "TrackResult",
    "propagate",
    "StenosisDetector",
    "ViewClassifier",
    "__version__",
]
