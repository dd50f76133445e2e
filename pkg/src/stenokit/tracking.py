"""Correlation-filter tracking for propagating boxes across a frame sequence.

A per-box discriminative correlation filter is trained in the frequency
domain by ridge regression against a centered Gaussian response, over three
feature channels (intensity and the two gradient magnitudes).  Channels are
combined by reliability weights derived from their response peaks, and a
fixed Gaussian spatial mask plays the role of spatial reliability.  The
peak-to-sidelobe ratio of the search response provides a confidence signal:
frames whose PSR drops below a threshold are flagged for manual review.

Tracks are independent and deterministic; state is confined to one thread.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Box
from .validation import check_image

__all__ = ["TrackerParams", "TrackResult", "CorrelationTracker", "propagate"]


@dataclass(frozen=True)
class TrackerParams:
    learn_rate: float = 0.02
    ridge: float = 0.01
    padding: float = 2.5
    psr_threshold: float = 5.0
    response_sigma: float = 3.0
    peak_exclusion: int = 11

    def __post_init__(self):
        if not (0 < self.learn_rate < 1):
            raise ValueError("learn_rate must be in (0, 1)")
        if self.ridge <= 0:
            raise ValueError("ridge must be positive")
        if self.padding <= 1:
            raise ValueError("padding must exceed 1")


@dataclass(frozen=True)
class TrackResult:
    box: Box
    psr: float
    flagged: bool


def _cosine_window(h: int, w: int) -> np.ndarray:
    return np.outer(np.hanning(h), np.hanning(w))


def _gaussian_mask(h: int, w: int, sigma_y: float, sigma_x: float) -> np.ndarray:
    y = np.arange(h) - h // 2
    x = np.arange(w) - w // 2
    return np.exp(
        -0.5 * ((y[:, None] / sigma_y) ** 2 + (x[None, :] / sigma_x) ** 2)
    )


def _crop(frame: np.ndarray, cy: int, cx: int, h: int, w: int) -> np.ndarray:
    """Crop a window centered at (cy, cx), replicating edges outside the frame."""
    y0 = cy - h // 2
    x0 = cx - w // 2
    fh, fw = frame.shape
    pad_top = max(0, -y0)
    pad_left = max(0, -x0)
    pad_bottom = max(0, y0 + h - fh)
    pad_right = max(0, x0 + w - fw)
    ys = slice(max(0, y0), min(fh, y0 + h))
    xs = slice(max(0, x0), min(fw, x0 + w))
    patch = frame[ys, xs]
    if pad_top or pad_left or pad_bottom or pad_right:
        patch = np.pad(patch, ((pad_top, pad_bottom), (pad_left, pad_right)), mode="edge")
    return patch


def _feature_channels(patch: np.ndarray) -> list[np.ndarray]:
    """Intensity plus x/y gradient magnitudes, each z-normalized."""
    gy, gx = np.gradient(patch)
    channels = [patch, np.abs(gx), np.abs(gy)]
    out = []
    for c in channels:
        out.append((c - c.mean()) / (c.std() + 1e-5))
    return out


def _parabolic_offset(r_minus: float, r_0: float, r_plus: float) -> float:
    denom = r_minus - 2 * r_0 + r_plus
    if abs(denom) < 1e-12:
        return 0.0
    offset = 0.5 * (r_minus - r_plus) / denom
    return float(np.clip(offset, -0.5, 0.5))


class CorrelationTracker:
    """One correlation-filter track for a single box.

    Usage: construct with the reference frame and box, then call
    :meth:`update` once per subsequent frame.
    """

    def __init__(self, frame, box: Box, params: TrackerParams = TrackerParams()):
        frame = check_image(frame)
        self.params = params
        fh, fw = frame.shape
        x1, y1, x2, y2 = box.corners
        if x1 < 0 or y1 < 0 or x2 > fw or y2 > fh:
            raise ValueError(f"box {box} not inside the {fw}x{fh} frame")
        self.box = box
        self.image_shape = frame.shape
        # odd window sides keep the Gaussian target exactly symmetric
        self.win_h = max(9, int(round(box.h * params.padding)) | 1)
        self.win_w = max(9, int(round(box.w * params.padding)) | 1)
        self.window = _cosine_window(self.win_h, self.win_w) * _gaussian_mask(
            self.win_h, self.win_w, sigma_y=1.5 * box.h, sigma_x=1.5 * box.w
        )
        # the analysis window deadens the response borders; PSR statistics are
        # taken over the part of the window that actually carries signal
        self._active = self.window > 0.2 * self.window.max()

        # training target: Gaussian peaked at the window center, so the
        # response argmax sits at (win_h//2, win_w//2) for a stationary target
        y = np.arange(self.win_h) - self.win_h // 2
        x = np.arange(self.win_w) - self.win_w // 2
        g = np.exp(
            -(y[:, None] ** 2 + x[None, :] ** 2) / (2 * params.response_sigma**2)
        )
        self._G = np.fft.fft2(g)

        spectra = self._patch_spectra(frame, box.cy, box.cx)
        self._num = [self._G * np.conj(F) for F in spectra]
        self._den = [F * np.conj(F) + params.ridge for F in spectra]
        peaks = np.array([self._channel_response(F, i).max() for i, F in enumerate(spectra)])
        self.channel_weights = self._normalize_weights(peaks)

    # -- internals ---------------------------------------------------------

    def _patch_spectra(self, frame, cy, cx):
        patch = _crop(frame, int(round(cy)), int(round(cx)), self.win_h, self.win_w)
        return [np.fft.fft2(c * self.window) for c in _feature_channels(patch)]

    def _channel_response(self, F, idx):
        return np.real(np.fft.ifft2(F * self._num[idx] / self._den[idx]))

    @staticmethod
    def _normalize_weights(peaks):
        peaks = np.clip(peaks, 0, None)
        total = peaks.sum()
        if total <= 0:
            return np.full(len(peaks), 1.0 / len(peaks))
        return peaks / total

    def _psr(self, response, peak_idx):
        h, w = response.shape
        half = self.params.peak_exclusion // 2
        yy = (np.arange(h)[:, None] - peak_idx[0] + h // 2) % h - h // 2
        xx = (np.arange(w)[None, :] - peak_idx[1] + w // 2) % w - w // 2
        outside_peak = (np.abs(yy) > half) | (np.abs(xx) > half)
        sidelobe = response[outside_peak & self._active]
        if sidelobe.size < 2:
            return 0.0
        return float(
            (response[peak_idx] - sidelobe.mean()) / (sidelobe.std() + 1e-9)
        )

    # -- public API --------------------------------------------------------

    def response(self, frame, cy=None, cx=None) -> np.ndarray:
        """Channel-weighted correlation response of the current filter over the
        search window centered on the current box (or an explicit center)."""
        frame = check_image(frame)
        cy = self.box.cy if cy is None else cy
        cx = self.box.cx if cx is None else cx
        spectra = self._patch_spectra(frame, cy, cx)
        resp = np.zeros((self.win_h, self.win_w))
        for wgt, F, i in zip(self.channel_weights, spectra, range(len(spectra))):
            resp += wgt * self._channel_response(F, i)
        return resp

    def update(self, frame) -> TrackResult:
        """Locate the box in the next frame and adapt the filter."""
        frame = check_image(frame)
        p = self.params
        crop_cy = int(round(self.box.cy))
        crop_cx = int(round(self.box.cx))
        spectra = self._patch_spectra(frame, self.box.cy, self.box.cx)
        responses = [self._channel_response(F, i) for i, F in enumerate(spectra)]
        resp = np.zeros((self.win_h, self.win_w))
        for wgt, r in zip(self.channel_weights, responses):
            resp += wgt * r

        peak = np.unravel_index(int(np.argmax(resp)), resp.shape)
        psr = self._psr(resp, peak)

        h, w = resp.shape
        # displacement relative to the window center; wrap only matters for
        # shifts beyond half a window, which the padding factor rules out
        dy = peak[0] - h // 2
        dx = peak[1] - w // 2
        dy += _parabolic_offset(
            resp[(peak[0] - 1) % h, peak[1]], resp[peak], resp[(peak[0] + 1) % h, peak[1]]
        )
        dx += _parabolic_offset(
            resp[peak[0], (peak[1] - 1) % w], resp[peak], resp[peak[0], (peak[1] + 1) % w]
        )

        new_cx = crop_cx + dx
        new_cy = crop_cy + dy

        # keep the box inside the frame; moving it counts as a tracking fault
        fh, fw = frame.shape
        clamped_cx = float(np.clip(new_cx, self.box.w / 2, fw - self.box.w / 2))
        clamped_cy = float(np.clip(new_cy, self.box.h / 2, fh - self.box.h / 2))
        clamped = (clamped_cx != new_cx) or (clamped_cy != new_cy)
        self.box = Box(clamped_cx, clamped_cy, self.box.w, self.box.h)

        # adapt filter and channel reliabilities at the new location
        new_spectra = self._patch_spectra(frame, self.box.cy, self.box.cx)
        lr = p.learn_rate
        for i, F in enumerate(new_spectra):
            self._num[i] = lr * (self._G * np.conj(F)) + (1 - lr) * self._num[i]
            self._den[i] = lr * (F * np.conj(F) + p.ridge) + (1 - lr) * self._den[i]
        peaks = np.array([r.max() for r in responses])
        self.channel_weights = self._normalize_weights(
            (1 - lr) * self.channel_weights + lr * self._normalize_weights(peaks)
        )

        flagged = bool(psr < p.psr_threshold or clamped)
        return TrackResult(box=self.box, psr=psr, flagged=flagged)


def propagate(
    frames,
    ref_index: int,
    ref_boxes,
    params: TrackerParams = TrackerParams(),
) -> list[list[TrackResult]]:
    """Propagate reference-frame boxes across a whole sequence.

    Each reference box gets an independent track, run forward from the
    reference frame to the end and backward (on the reversed prefix) to the
    start.  The reference frame keeps its boxes verbatim and unflagged.

    Returns one list of TrackResult per frame, aligned with ``ref_boxes``.
    """
    n = len(frames)
    if n == 0:
        raise ValueError("empty sequence")
    if not (0 <= ref_index < n):
        raise ValueError(f"reference index {ref_index} outside sequence of {n} frames")

    results: list[list[TrackResult | None]] = [[None] * len(ref_boxes) for _ in range(n)]
    for b, box in enumerate(ref_boxes):
        results[ref_index][b] = TrackResult(box=box, psr=float("inf"), flagged=False)
        tracker = CorrelationTracker(frames[ref_index], box, params)
        for t in range(ref_index + 1, n):
            results[t][b] = tracker.update(frames[t])
        tracker = CorrelationTracker(frames[ref_index], box, params)
        for t in range(ref_index - 1, -1, -1):
            results[t][b] = tracker.update(frames[t])
    return [list(row) for row in results]
