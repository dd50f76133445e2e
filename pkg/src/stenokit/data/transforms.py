"""Photometric augmentation and image downscaling."""

from __future__ import annotations

import numpy as np
from PIL import Image

from ..validation import check_image

__all__ = ["augment", "downscale"]


def augment(
    frame,
    brightness_delta: float = 0.0,
    contrast_gain: float = 1.0,
    clip_range: tuple[float, float] | None = (0.0, 255.0),
):
    """Scale contrast about the frame mean, then shift brightness.

    out = clip(gain * (in - mean) + mean + delta).  With ``clip_range=None``
    the result is unclipped (useful for float training data); the default
    clips to the 8-bit intensity range.  Returns float64.
    """
    frame = check_image(frame)
    if contrast_gain <= 0:
        raise ValueError("contrast gain must be positive")
    mean = frame.mean()
    # algebraically gain*(x - mean) + mean + delta, written so gain=1,
    # delta=0 reproduces the input bit for bit
    out = contrast_gain * frame + (1.0 - contrast_gain) * mean + brightness_delta
    if clip_range is not None:
        out = np.clip(out, clip_range[0], clip_range[1])
    return out


def downscale(frame, target: int | tuple[int, int]):
    """Area-weighted downscaling to ``target`` (side or (width, height)).

    Uses box resampling, which averages the source area covered by each
    output pixel; upscaling requests are rejected.  Returns the input dtype
    (rounding for integer inputs).
    """
    arr = np.asarray(frame)
    check_image(arr)
    if isinstance(target, int):
        tw, th = target, target
    else:
        tw, th = target
    h, w = arr.shape
    if tw > w or th > h:
        raise ValueError(f"cannot upscale {w}x{h} to {tw}x{th}")
    if (tw, th) == (w, h):
        return arr.copy()
    img = Image.fromarray(arr.astype(np.float32), mode="F")
    out = np.asarray(img.resize((tw, th), Image.BOX), dtype=np.float64)
    if np.issubdtype(arr.dtype, np.integer):
        info = np.iinfo(arr.dtype)
        return np.clip(np.rint(out), info.min, info.max).astype(arr.dtype)
    return out.astype(arr.dtype)
