"""Input validation helpers shared across the toolkit."""

from __future__ import annotations

import numbers

import numpy as np

__all__ = [
    "check_image",
    "check_image_stack",
    "check_boxes_array",
    "check_probability_rows",
    "check_random_state",
]


def check_image(frame, name: str = "frame") -> np.ndarray:
    """Validate a single 2-D grayscale image and return it as float64."""
    arr = np.asarray(frame)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2-D grayscale image, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} is empty")
    arr = arr.astype(np.float64, copy=False)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_image_stack(frames, name: str = "frames") -> np.ndarray:
    """Validate a (T, H, W) stack of grayscale images."""
    arr = np.asarray(frames)
    if arr.ndim != 3:
        raise ValueError(f"{name} must have shape (n, height, width), got {arr.shape}")
    if arr.shape[0] == 0:
        raise ValueError(f"{name} is empty")
    return arr


def check_boxes_array(boxes, name: str = "boxes") -> np.ndarray:
    """Validate an (N, 4) array of center-form boxes with positive sizes."""
    arr = np.asarray(boxes, dtype=np.float64)
    if arr.size == 0:
        return arr.reshape(0, 4)
    if arr.ndim != 2 or arr.shape[1] != 4:
        raise ValueError(f"{name} must have shape (n, 4) as [cx, cy, w, h], got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    if np.any(arr[:, 2:] <= 0):
        raise ValueError(f"{name} contains non-positive widths or heights")
    return arr


def check_probability_rows(probs, name: str = "probabilities", tol: float = 1e-6) -> np.ndarray:
    """Validate an (N, K) array of per-row probability distributions."""
    arr = np.asarray(probs, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ValueError(f"{name} must be a non-empty (n, k) array, got shape {arr.shape}")
    if np.any(arr < 0) or np.any(arr > 1):
        raise ValueError(f"{name} has entries outside [0, 1]")
    row_sums = arr.sum(axis=1)
    if np.any(np.abs(row_sums - 1.0) > tol):
        raise ValueError(f"{name} rows must sum to 1 within {tol}")
    return arr


def check_random_state(seed) -> np.random.Generator:
    """Turn a seed, Generator, or None into a numpy Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None or isinstance(seed, numbers.Integral):
        return np.random.default_rng(seed)
    raise TypeError(f"cannot build a random generator from {seed!r}")
