import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from stenokit.estimators import StenosisDetector, ViewClassifier


def blob_classification_set(n=40, size=32, seed=0):
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size]
    images = np.zeros((n, size, size))
    labels = np.array(["left", "right"])[rng.integers(0, 2, n)]
    for i in range(n):
        cx = rng.uniform(6, 10) if labels[i] == "left" else rng.uniform(22, 26)
        cy = rng.uniform(10, 22)
        images[i] = np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / 18.0)
        images[i] += rng.normal(0, 0.05, (size, size))
    return images, labels


def blob_detection_set(n=12, size=32, seed=0):
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:size, 0:size]
    images = np.zeros((n, size, size))
    boxes = []
    for i in range(n):
        cx, cy = rng.uniform(10, size - 10, 2)
        images[i] = np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / 12.0)
        boxes.append(np.array([[cx, cy, 10.0, 10.0]]))
    return images, boxes


class TestViewClassifier:
    def test_sklearn_params_round_trip(self):
        clf = ViewClassifier(learning_rate=2e-3, epochs=5)
        params = clf.get_params()
        assert params["learning_rate"] == 2e-3
        cloned = clone(clf)
        assert cloned.get_params() == params

    def test_unfitted_predict_raises(self):
        with pytest.raises(NotFittedError):
            ViewClassifier().predict(np.zeros((1, 32, 32)))

    def test_fit_predict_labels(self):
        images, labels = blob_classification_set(n=40, seed=1)
        clf = ViewClassifier(
            block_channels=(4, 8, 16), learning_rate=3e-3, epochs=15,
            freeze_epochs=3, batch_size=8, seed=1,
        )
        clf.fit(images, labels)
        preds = clf.predict(images)
        assert set(preds) <= {"left", "right"}
        assert np.mean(preds == labels) >= 0.9
        probs = clf.predict_proba(images)
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-9)

    def test_score_mixin(self):
        images, labels = blob_classification_set(n=24, seed=2)
        clf = ViewClassifier(block_channels=(4, 8), learning_rate=3e-3, epochs=8,
                             freeze_epochs=0, batch_size=8, seed=2)
        clf.fit(images, labels)
        assert 0.0 <= clf.score(images, labels) <= 1.0


class TestStenosisDetector:
    def test_sklearn_params_round_trip(self):
        det = StenosisDetector(steps=10, learning_rate=1e-3)
        cloned = clone(det)
        assert cloned.get_params()["steps"] == 10

    def test_unfitted_predict_raises(self):
        with pytest.raises(NotFittedError):
            StenosisDetector().predict(np.zeros((1, 32, 32)))

    def test_fit_predict_shapes(self):
        images, boxes = blob_detection_set(n=10, seed=3)
        det = StenosisDetector(
            block_channels=(4, 8, 16), ratios=(1.0,), scales=(1.0, 1.5),
            base_sizes=(8.0, 16.0), steps=60, batch_size=6,
            learning_rate=5e-3, seed=3,
        )
        det.fit(images, boxes)
        preds = det.predict(images[:3])
        assert len(preds) == 3
        for frame_dets in preds:
            assert len(frame_dets) <= det.max_out
            for d in frame_dets:
                assert 0.0 <= d.score <= 1.0

    def test_mismatched_lengths_rejected(self):
        images, boxes = blob_detection_set(n=4)
        det = StenosisDetector(steps=1)
        with pytest.raises(ValueError):
            det.fit(images, boxes[:2])
