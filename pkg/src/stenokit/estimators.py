"""Scikit-learn-style estimators wrapping the toy networks.

``ViewClassifier`` and ``StenosisDetector`` expose fit/predict with
``get_params``/``set_params`` from :class:`sklearn.base.BaseEstimator`, so
they clone and grid-search like any other estimator.  Images are passed as
(n, height, width) arrays; detector targets are lists of (m, 4) center-form
box arrays.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from .geometry import generate_anchors
from .inference import Detection, NmsParams, infer
from .nets import (
    NetConfig,
    ToyNet,
    classifier_schedule,
    detector_schedule,
    train_classifier,
    train_detector,
)
from .nets.training import standardize_images
from .validation import check_boxes_array, check_image_stack

__all__ = ["ViewClassifier", "StenosisDetector"]


class ViewClassifier(BaseEstimator, ClassifierMixin):
    """Small CNN classifier for viewing angles with a two-phase freeze schedule."""

    def __init__(
        self,
        block_channels=(8, 16, 32),
        learning_rate=1e-3,
        epochs=30,
        batch_size=32,
        freeze_epochs=15,
        seed=0,
    ):
        self.block_channels = block_channels
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.freeze_epochs = freeze_epochs
        self.seed = seed

    def fit(self, X, y, X_val=None, y_val=None):
        X = check_image_stack(X, "X").astype(np.float64)
        y = np.asarray(y)
        self.classes_, y_idx = np.unique(y, return_inverse=True)
        cfg = NetConfig(
            head="classifier",
            block_channels=tuple(self.block_channels),
            num_classes=len(self.classes_),
        )
        self.net_ = ToyNet(cfg, seed=self.seed)
        schedule = classifier_schedule(
            num_blocks=len(self.block_channels),
            learning_rate=self.learning_rate,
            epochs=self.epochs,
            batch_size=self.batch_size,
            freeze_epochs=self.freeze_epochs,
            seed=self.seed,
        )
        val_idx = None
        if X_val is not None:
            X_val = check_image_stack(X_val, "X_val").astype(np.float64)
            val_idx = np.searchsorted(self.classes_, np.asarray(y_val))
        self.history_ = train_classifier(self.net_, X, y_idx, schedule, X_val, val_idx)
        return self

    def _check_fitted(self):
        if not hasattr(self, "net_"):
            raise NotFittedError("fit the classifier first")

    def predict_proba(self, X):
        self._check_fitted()
        X = check_image_stack(X, "X").astype(np.float64)
        logits = self.net_.forward(standardize_images(X))
        z = logits - logits.max(axis=1, keepdims=True)
        ez = np.exp(z)
        return ez / ez.sum(axis=1, keepdims=True)

    def predict(self, X):
        probs = self.predict_proba(X)
        return self.classes_[np.argmax(probs, axis=1)]


class StenosisDetector(BaseEstimator):
    """Anchor-based single-class lesion detector at desk scale.

    fit(X, y) takes grayscale frames and per-frame ground-truth box arrays;
    predict(X) returns one list of scored detections per frame.
    """

    def __init__(
        self,
        block_channels=(8, 16, 32, 48),
        ratios=(1.0, 0.5, 2.0, 4.0),
        scales=(1.0, 2 ** 0.5, 2.0),
        base_sizes=None,
        learning_rate=8e-4,
        momentum=0.9,
        l2_lambda=4e-4,
        steps=3500,
        batch_size=32,
        augment_brightness=0.0,
        augment_contrast=0.0,
        pos_thr=0.5,
        neg_thr=0.4,
        score_thr=0.5,
        iou_thr=0.5,
        max_out=5,
        seed=0,
    ):
        self.block_channels = block_channels
        self.ratios = ratios
        self.scales = scales
        self.base_sizes = base_sizes
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.l2_lambda = l2_lambda
        self.steps = steps
        self.batch_size = batch_size
        self.augment_brightness = augment_brightness
        self.augment_contrast = augment_contrast
        self.pos_thr = pos_thr
        self.neg_thr = neg_thr
        self.score_thr = score_thr
        self.iou_thr = iou_thr
        self.max_out = max_out
        self.seed = seed

    def fit(self, X, y):
        X = check_image_stack(X, "X").astype(np.float64)
        boxes = [check_boxes_array(b, f"y[{i}]") for i, b in enumerate(y)]
        cfg = NetConfig(
            head="detector",
            block_channels=tuple(self.block_channels),
            ratios=tuple(self.ratios),
            scales=tuple(self.scales),
            base_sizes=None if self.base_sizes is None else tuple(self.base_sizes),
        )
        self.net_ = ToyNet(cfg, seed=self.seed)
        schedule = detector_schedule(
            learning_rate=self.learning_rate,
            momentum=self.momentum,
            l2_lambda=self.l2_lambda,
            steps=self.steps,
            batch_size=self.batch_size,
            augment_brightness=self.augment_brightness,
            augment_contrast=self.augment_contrast,
            seed=self.seed,
        )
        self.history_ = train_detector(
            self.net_, X, boxes, schedule, pos_thr=self.pos_thr, neg_thr=self.neg_thr
        )
        return self

    def _check_fitted(self):
        if not hasattr(self, "net_"):
            raise NotFittedError("fit the detector first")

    def nms_params(self) -> NmsParams:
        return NmsParams(score_thr=self.score_thr, iou_thr=self.iou_thr, max_out=self.max_out)

    def predict(self, X) -> list[list[Detection]]:
        self._check_fitted()
        X = check_image_stack(X, "X").astype(np.float64)
        h, w = X.shape[1], X.shape[2]
        grid = generate_anchors(self.net_.anchor_config(), w, h)
        probs, regs = self.net_.forward(standardize_images(X))
        params = self.nms_params()
        return [
            infer(probs[i], regs[i], grid, w, h, params) for i in range(X.shape[0])
        ]
