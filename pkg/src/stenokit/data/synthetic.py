"""Synthetic angiography-like sequence generation.

Each sequence shows a smooth dark curvilinear vessel with a Gaussian
cross-section on a bright noisy background.  Stenoses are localized width
narrowings; every one carries a ground-truth box centered on the narrowing
with side length four times the nominal vessel width.  Vessel opacity ramps
from nothing through full contrast and back out across the four interval
phases, and the reference frame is the middle frame of the optimal phase.
Generation is deterministic per seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.spatial import cKDTree

from ..geometry import Box
from .manifest import FrameRecord, SequenceManifest

__all__ = ["SynthParams", "synth_sequence", "synth_dataset"]

_CURVE_SAMPLES = 512


@dataclass(frozen=True)
class SynthParams:
    image_size: int = 64
    control_points: int = 5
    vessel_width: float = 4.0
    stenosis_count: int = 1
    narrowing: float = 0.45
    phase_lengths: tuple[int, int, int, int] = (2, 2, 8, 3)
    noise_level: float = 5.0
    contrast_depth: float = 110.0
    background: float = 185.0
    drift: tuple[float, float] = (0.0, 0.0)
    seed: int = 0

    def __post_init__(self):
        if not (0 < self.narrowing < 1):
            raise ValueError("narrowing factor must be in (0, 1)")
        if any(n < 0 for n in self.phase_lengths) or self.phase_lengths[2] < 1:
            raise ValueError("phase lengths must be >= 0 with at least one optimal frame")
        if self.control_points < 2:
            raise ValueError("need at least two vessel control points")
        if self.vessel_width <= 0 or self.stenosis_count < 0:
            raise ValueError("invalid vessel geometry")
        if self.image_size < 16:
            raise ValueError("image size too small")


def _vessel_geometry(p: SynthParams, rng: np.random.Generator):
    """Sampled centerline (t, x(t), y(t)), per-sample width, and stenosis params."""
    size = p.image_size
    t_ctrl = np.linspace(0.0, 1.0, p.control_points)
    x_ctrl = rng.uniform(0.3 * size, 0.7 * size, p.control_points)
    spline = CubicSpline(t_ctrl, x_ctrl)
    t = np.linspace(0.0, 1.0, _CURVE_SAMPLES)
    x = spline(t)
    y = t * (size + 16.0) - 8.0  # runs a little past both edges

    if p.stenosis_count:
        slots = np.linspace(0.3, 0.7, p.stenosis_count + 2)[1:-1]
        t0s = np.clip(slots + rng.uniform(-0.04, 0.04, p.stenosis_count), 0.25, 0.75)
    else:
        t0s = np.empty(0)
    widths = np.full(_CURVE_SAMPLES, p.vessel_width)
    for t0 in t0s:
        widths *= 1.0 - (1.0 - p.narrowing) * np.exp(-((t - t0) ** 2) / (2 * 0.035**2))
    centers = np.array([[float(spline(t0)), float(t0 * (size + 16.0) - 8.0)] for t0 in t0s])
    return x, y, widths, centers


def _opacities(phase_lengths):
    n_a, n_b, n_c, n_d = phase_lengths
    out = [0.0] * n_a
    out += [(i + 1) / (n_b + 1) for i in range(n_b)]
    out += [1.0] * n_c
    out += [(n_d - i) / (n_d + 1) for i in range(n_d)]
    return out


def _intervals(phase_lengths):
    names = ("no_contrast", "introducing", "optimal", "vanishing")
    out = []
    for name, count in zip(names, phase_lengths):
        out += [name] * count
    return out


def _render_frame(p: SynthParams, x, y, widths, offset, opacity, noise_rng):
    size = p.image_size
    img = np.full((size, size), p.background)
    if opacity > 0:
        pts = np.column_stack([x + offset[0], y + offset[1]])
        tree = cKDTree(pts)
        yy, xx = np.mgrid[0:size, 0:size]
        pixels = np.column_stack([xx.ravel() + 0.5, yy.ravel() + 0.5])
        dist, idx = tree.query(pixels)
        sigma = widths[idx] / 2.0
        profile = np.exp(-(dist**2) / (2.0 * sigma**2)).reshape(size, size)
        img -= opacity * p.contrast_depth * profile
    if p.noise_level > 0:
        img = img + noise_rng.normal(0.0, p.noise_level, (size, size))
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def synth_sequence(
    p: SynthParams,
    sequence_id: str = "seq-0000",
    patient_id: str = "pat-0000",
    view: str = "RCA",
):
    """Generate one sequence; returns (frames (t, h, w) uint8, manifest)."""
    rng = np.random.default_rng(p.seed)
    x, y, widths, stenosis_centers = _vessel_geometry(p, rng)
    opacities = _opacities(p.phase_lengths)
    intervals = _intervals(p.phase_lengths)
    n_a, n_b, n_c, _ = p.phase_lengths
    ref_index = n_a + n_b + n_c // 2
    box_side = 4.0 * p.vessel_width

    frames = []
    records = []
    for t_idx, (interval, opacity) in enumerate(zip(intervals, opacities)):
        offset = (p.drift[0] * t_idx, p.drift[1] * t_idx)
        noise_rng = np.random.default_rng([p.seed, 7919 + t_idx])
        frames.append(_render_frame(p, x, y, widths, offset, opacity, noise_rng))
        boxes = []
        if interval != "no_contrast":
            boxes = [
                Box(cx + offset[0], cy + offset[1], box_side, box_side)
                for cx, cy in stenosis_centers
            ]
        records.append(
            FrameRecord(
                index=t_idx,
                interval=interval,
                boxes=boxes,
                is_reference=(t_idx == ref_index),
            )
        )
    manifest = SequenceManifest(
        sequence_id=sequence_id,
        patient_id=patient_id,
        view=view,
        frame_size=(p.image_size, p.image_size),
        frames=records,
        provenance={"kind": "synthetic", "seed": p.seed},
    )
    return np.stack(frames), manifest


def synth_dataset(
    n_sequences: int,
    base_params: SynthParams = SynthParams(),
    seed: int = 0,
    views: tuple[str, ...] = ("RCA", "LCA"),
    lesion_rate: float = 0.8,
    sequences_per_patient: int = 2,
):
    """Generate a mixed dataset of lesion and no-lesion sequences.

    Views alternate, roughly (1 - lesion_rate) of the sequences carry no
    stenosis, and consecutive sequences share a patient id so patient-level
    splits are meaningful.  Yields (frames, manifest) pairs.
    """
    rng = np.random.default_rng(seed)
    from dataclasses import replace

    for i in range(n_sequences):
        lesion = rng.uniform() < lesion_rate
        params = replace(
            base_params,
            seed=int(rng.integers(0, 2**31 - 1)),
            stenosis_count=base_params.stenosis_count if lesion else 0,
        )
        yield synth_sequence(
            params,
            sequence_id=f"seq-{i:04d}",
            patient_id=f"pat-{i // max(1, sequences_per_patient):04d}",
            view=views[i % len(views)],
        )
