"""Synthetic rigid-motion scenes for tracker tests.

The scene is an analytic function of continuous coordinates, so translating
it by any real-valued shift is exact: the generator itself is the oracle for
the true target position.
"""

import numpy as np


def textured_scene(size=96, seed=0, n_waves=24):
    """Build a renderer for a rigidly translating scene.

    Returns (render, target_center) where render(shift, noise, noise_seed)
    produces one frame with the whole scene moved by ``shift`` = (dx, dy) and
    target_center is the target position at zero shift.  The background is a
    periodic band-limited texture; the target is an asymmetric blob pair.
    Additive noise does not translate with the scene.
    """
    rng = np.random.default_rng(seed)
    h = w = size
    freqs = rng.integers(1, 8, size=(n_waves, 2)).astype(float)
    phases = rng.uniform(0, 2 * np.pi, n_waves)
    amps = rng.uniform(0.3, 1.0, n_waves) / n_waves
    cx0 = cy0 = size / 2

    def render(shift=(0.0, 0.0), noise=0.0, noise_seed=0):
        dx, dy = shift
        y, x = np.mgrid[0:h, 0:w].astype(float)
        xs, ys = x - dx, y - dy
        img = np.zeros((h, w))
        for (fx, fy), ph, a in zip(freqs, phases, amps):
            img += a * np.cos(2 * np.pi * (fx * xs / w + fy * ys / h) + ph)
        img += 2.0 * np.exp(-(((xs - cx0) / 4) ** 2 + ((ys - cy0) / 6) ** 2))
        img += 1.2 * np.exp(-(((xs - cx0 - 6) / 3) ** 2 + ((ys - cy0 + 4) / 3) ** 2))
        if noise:
            noise_rng = np.random.default_rng([noise_seed, 911])
            img = img + noise_rng.normal(0.0, noise, img.shape)
        return img

    return render, (cx0, cy0)


def noise_frame(size=96, seed=0, scale=1.0):
    rng = np.random.default_rng([seed, 4242])
    return rng.normal(0.0, scale, (size, size))
