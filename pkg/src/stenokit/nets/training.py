"""Training loops for the view classifier and the lesion detector.

The classifier trains with Adam under a two-phase schedule: early epochs
update only the last backbone block and the classification head, later
epochs unfreeze everything.  The learning rate drops by a fixed factor when
the monitored loss plateaus.  The detector trains with momentum SGD on the
combined focal + smooth-L1 loss plus an L2 penalty on kernel weights, with
brightness/contrast augmentation applied on the fly.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from ..geometry import generate_anchors, match_anchors
from ..losses import FocalParams, detection_loss_with_grads
from .network import ToyNet
from .optim import Adam, MomentumSGD, ReduceLROnPlateau

__all__ = [
    "TrainSchedule",
    "classifier_schedule",
    "detector_schedule",
    "softmax_cross_entropy",
    "standardize_images",
    "train_classifier",
    "train_detector",
]


def standardize_images(images: np.ndarray) -> np.ndarray:
    """Z-score each image; nets train and predict on standardized inputs so
    raw 8-bit frames and unit-scale arrays behave identically."""
    images = np.asarray(images, dtype=np.float64)
    axes = tuple(range(1, images.ndim))
    mean = images.mean(axis=axes, keepdims=True)
    std = images.std(axis=axes, keepdims=True)
    return (images - mean) / (std + 1e-6)


@dataclass(frozen=True)
class TrainSchedule:
    """Optimizer settings, duration, and freeze phases for one training run.

    ``freeze_phases`` maps inclusive 1-based epoch ranges to the component
    set trained during those epochs (None trains everything).  ``epochs``
    drives the classifier loop, ``steps`` the detector loop.
    """

    optimizer: str = "adam"
    learning_rate: float = 1e-5
    momentum: float = 0.9
    l2_lambda: float = 0.0
    batch_size: int = 32
    epochs: int = 30
    steps: int = 0
    plateau_factor: float = 0.2
    plateau_patience: int = 3
    plateau_min_delta: float = 1e-4
    freeze_phases: tuple[tuple[int, int, tuple[str, ...] | None], ...] = ()
    augment_brightness: float = 0.0
    augment_contrast: float = 0.0
    seed: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    def components_for_epoch(self, epoch: int) -> tuple[str, ...] | None:
        for first, last, components in self.freeze_phases:
            if first <= epoch <= last:
                return components
        return None


def classifier_schedule(
    num_blocks: int = 5,
    learning_rate: float = 1e-5,
    epochs: int = 30,
    batch_size: int = 32,
    freeze_epochs: int = 15,
    seed: int = 0,
) -> TrainSchedule:
    """Two-phase classifier recipe: the first ``freeze_epochs`` epochs train
    only the last block and the head, the rest train the whole network."""
    phases = ()
    if freeze_epochs > 0:
        phases = (
            (1, freeze_epochs, (f"C{num_blocks}", "head")),
            (freeze_epochs + 1, epochs, None),
        )
    return TrainSchedule(
        optimizer="adam",
        learning_rate=learning_rate,
        epochs=epochs,
        batch_size=batch_size,
        freeze_phases=phases,
        seed=seed,
    )


def detector_schedule(
    learning_rate: float = 8e-4,
    momentum: float = 0.9,
    l2_lambda: float = 4e-4,
    steps: int = 3500,
    batch_size: int = 32,
    augment_brightness: float = 0.0,
    augment_contrast: float = 0.0,
    seed: int = 0,
) -> TrainSchedule:
    return TrainSchedule(
        optimizer="momentum",
        learning_rate=learning_rate,
        momentum=momentum,
        l2_lambda=l2_lambda,
        epochs=0,
        steps=steps,
        batch_size=batch_size,
        augment_brightness=augment_brightness,
        augment_contrast=augment_contrast,
        seed=seed,
    )


def softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray):
    """Mean cross-entropy of softmax(logits) and its gradient w.r.t. logits."""
    z = logits - logits.max(axis=1, keepdims=True)
    ez = np.exp(z)
    probs = ez / ez.sum(axis=1, keepdims=True)
    n = logits.shape[0]
    idx = np.arange(n)
    loss = float(-np.mean(np.log(np.clip(probs[idx, labels], 1e-12, None))))
    dlogits = probs.copy()
    dlogits[idx, labels] -= 1.0
    return loss, dlogits / n


def _make_optimizer(net: ToyNet, schedule: TrainSchedule):
    if schedule.optimizer == "adam":
        return Adam(net.parameters(), lr=schedule.learning_rate)
    if schedule.optimizer == "momentum":
        return MomentumSGD(net.parameters(), lr=schedule.learning_rate, momentum=schedule.momentum)
    raise ValueError(f"unknown optimizer {schedule.optimizer!r}")


def train_classifier(
    net: ToyNet,
    images: np.ndarray,
    labels: np.ndarray,
    schedule: TrainSchedule,
    val_images: np.ndarray | None = None,
    val_labels: np.ndarray | None = None,
) -> list[dict]:
    """Train a classifier net in place; returns the per-epoch log.

    The plateau rule watches the validation loss when a validation set is
    given and the training loss otherwise.
    """
    images = np.asarray(images, dtype=np.float64)
    labels = np.asarray(labels)
    if images.shape[0] == 0:
        raise ValueError("empty training set")
    rng = np.random.default_rng(schedule.seed)
    optimizer = _make_optimizer(net, schedule)
    plateau = ReduceLROnPlateau(
        optimizer,
        factor=schedule.plateau_factor,
        patience=schedule.plateau_patience,
        min_delta=schedule.plateau_min_delta,
    )
    history = []
    n = images.shape[0]
    for epoch in range(1, schedule.epochs + 1):
        net.set_trainable(schedule.components_for_epoch(epoch))
        order = rng.permutation(n)
        epoch_loss = 0.0
        batches = 0
        for start in range(0, n, schedule.batch_size):
            idx = order[start : start + schedule.batch_size]
            logits = net.forward(standardize_images(images[idx]))
            loss, dlogits = softmax_cross_entropy(logits, labels[idx])
            net.zero_grads()
            net.backward(dlogits)
            optimizer.step()
            epoch_loss += loss
            batches += 1
        train_loss = epoch_loss / batches

        if val_images is not None:
            val_logits = net.forward(standardize_images(val_images))
            monitored, _ = softmax_cross_entropy(val_logits, val_labels)
        else:
            monitored = train_loss
        reduced = plateau.step(monitored)
        history.append(
            {
                "epoch": epoch,
                "train_loss": train_loss,
                "monitored_loss": monitored,
                "lr": optimizer.lr,
                "lr_reduced": reduced,
            }
        )
    net.set_trainable(None)
    return history


def train_detector(
    net: ToyNet,
    images: np.ndarray,
    gt_boxes: list,
    schedule: TrainSchedule,
    focal: FocalParams = FocalParams(),
    pos_thr: float = 0.5,
    neg_thr: float = 0.4,
) -> list[dict]:
    """Train a detector net in place; returns the per-step loss log.

    ``gt_boxes`` holds one (m_i, 4) center-form array per image.  Anchor
    assignments depend only on the ground truth, so they are computed once
    up front.  Augmentation draws brightness/contrast jitter per sample.
    """
    from ..data.transforms import augment

    images = np.asarray(images, dtype=np.float64)
    if images.shape[0] == 0:
        raise ValueError("empty training set")
    if images.shape[0] != len(gt_boxes):
        raise ValueError("images and gt_boxes must align")
    rng = np.random.default_rng(schedule.seed)
    optimizer = _make_optimizer(net, schedule)

    h, w = images.shape[1], images.shape[2]
    grid = generate_anchors(net.anchor_config(), w, h)
    assignments = [match_anchors(grid, boxes, pos_thr, neg_thr) for boxes in gt_boxes]

    kernels = net.kernel_params()
    history = []
    n = images.shape[0]
    for step in range(1, schedule.steps + 1):
        idx = rng.integers(0, n, size=min(schedule.batch_size, n))
        batch = images[idx]
        if schedule.augment_brightness or schedule.augment_contrast:
            batch = np.stack(
                [
                    augment(
                        img,
                        brightness_delta=rng.uniform(
                            -schedule.augment_brightness, schedule.augment_brightness
                        ),
                        contrast_gain=float(
                            np.exp(rng.uniform(-schedule.augment_contrast, schedule.augment_contrast))
                        ),
                        clip_range=None,
                    )
                    for img in batch
                ]
            )
        probs, regs = net.forward(standardize_images(batch))
        b = len(idx)
        dprobs = np.zeros_like(probs)
        dregs = np.zeros_like(regs)
        cls_loss = reg_loss = 0.0
        for row, i in enumerate(idx):
            report, dp, dr, _ = detection_loss_with_grads(
                probs[row], assignments[i], regs[row], focal
            )
            cls_loss += report.cls_loss / b
            reg_loss += report.reg_loss / b
            dprobs[row] = dp / b
            dregs[row] = dr / b

        net.zero_grads()
        net.backward(dprobs, dregs)
        l2 = 0.0
        if schedule.l2_lambda:
            for p in kernels:
                l2 += schedule.l2_lambda * float(np.sum(p.value**2))
                p.grad += 2.0 * schedule.l2_lambda * p.value
        optimizer.step()
        history.append(
            {
                "step": step,
                "cls_loss": cls_loss,
                "reg_loss": reg_loss,
                "l2_penalty": l2,
                "total": cls_loss + reg_loss + l2,
            }
        )
    return history
