"""Class activation maps from gradients at the last backbone block."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .layers import bilinear_resize
from .network import ToyNet

__all__ = ["CamMap", "grad_cam"]


@dataclass(frozen=True)
class CamMap:
    """Nonnegative per-pixel relevance, max-normalized to 1 unless all zero."""

    heat: np.ndarray
    class_id: int

    def __post_init__(self):
        if np.any(self.heat < 0):
            raise ValueError("heat map must be nonnegative")
        peak = self.heat.max() if self.heat.size else 0.0
        if peak > 0 and not np.isclose(peak, 1.0):
            raise ValueError("nonzero heat map must be max-normalized")


def grad_cam(net: ToyNet, image: np.ndarray, class_id: int) -> CamMap:
    """Localize the image regions driving one class score.

    Channel weights are the spatial means of the class-logit gradient at the
    last backbone block; the map is the ReLU of the weighted activation sum,
    upsampled bilinearly to the input size and normalized to peak at 1.
    """
    if net.config.head != "classifier":
        raise ValueError("grad_cam needs a classifier net")
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise ValueError("grad_cam expects a single 2-D image")
    logits = net.forward(image[None, None])
    k = logits.shape[1]
    if not (0 <= class_id < k):
        raise ValueError(f"class_id must be in [0, {k})")
    dlogits = np.zeros_like(logits)
    dlogits[0, class_id] = 1.0
    net.zero_grads()
    net.backward(dlogits)

    activations = net._block_outs[-1][0]          # (C, h, w)
    grads = net.last_block_grad[0]                # (C, h, w)
    weights = grads.mean(axis=(1, 2))
    cam = np.maximum(np.tensordot(weights, activations, axes=1), 0.0)
    heat = bilinear_resize(cam, image.shape[0], image.shape[1])
    heat = np.maximum(heat, 0.0)
    peak = heat.max()
    if peak > 0:
        heat = heat / peak
    return CamMap(heat=heat, class_id=class_id)
