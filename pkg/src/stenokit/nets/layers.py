"""Neural-network building blocks with explicit forward/backward passes.

Layers cache what they need during forward and accumulate parameter
gradients during backward.  Everything runs in float64 so gradient checks
against central differences are meaningful.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "Param",
    "Conv2D",
    "ReLU",
    "GlobalAvgPool",
    "Dense",
    "UpsampleNearest2x",
    "sigmoid",
    "bilinear_resize",
]


class Param:
    """One parameter tensor with its gradient and a trainable flag."""

    __slots__ = ("name", "value", "grad", "trainable", "is_bias")

    def __init__(self, name: str, value: np.ndarray, is_bias: bool = False):
        self.name = name
        self.value = value
        self.grad = np.zeros_like(value)
        self.trainable = True
        self.is_bias = is_bias


class Conv2D:
    """Same-padded k x k convolution, stride 1 or 2, via im2col matmul."""

    def __init__(self, in_ch, out_ch, ksize=3, stride=1, rng=None, name="conv"):
        self.in_ch = in_ch
        self.out_ch = out_ch
        self.k = ksize
        self.stride = stride
        self.name = name
        fan_in = in_ch * ksize * ksize
        bound = np.sqrt(6.0 / fan_in)
        rng = rng if rng is not None else np.random.default_rng()
        w = rng.uniform(-bound, bound, size=(out_ch, in_ch, ksize, ksize))
        self.w = Param(f"{name}.w", w)
        self.b = Param(f"{name}.b", np.zeros(out_ch), is_bias=True)
        # a stack: shared layers run once per call site, backward pops in LIFO order
        self._caches = []

    def params(self):
        return [self.w, self.b]

    def reset(self):
        self._caches.clear()

    def forward(self, x):
        n, c, h, w = x.shape
        k, s = self.k, self.stride
        pad = k // 2
        ho = (h + 2 * pad - k) // s + 1
        wo = (w + 2 * pad - k) // s + 1
        xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
        cols = np.empty((n, c, k, k, ho, wo), dtype=x.dtype)
        for i in range(k):
            for j in range(k):
                cols[:, :, i, j] = xp[:, :, i : i + s * ho : s, j : j + s * wo : s]
        cols_mat = cols.reshape(n, c * k * k, ho * wo)
        w_mat = self.w.value.reshape(self.out_ch, c * k * k)
        out = np.matmul(w_mat, cols_mat) + self.b.value[None, :, None]
        self._caches.append((x.shape, cols_mat, ho, wo))
        return out.reshape(n, self.out_ch, ho, wo)

    def backward(self, dout):
        if not self._caches:
            raise RuntimeError("backward called before forward")
        x_shape, cols_mat, ho, wo = self._caches.pop()
        n, c, h, w = x_shape
        k, s = self.k, self.stride
        pad = k // 2
        dout_mat = dout.reshape(n, self.out_ch, ho * wo)
        if self.w.trainable:
            dw = np.einsum("nop,nfp->of", dout_mat, cols_mat)
            self.w.grad += dw.reshape(self.w.value.shape)
        if self.b.trainable:
            self.b.grad += dout_mat.sum(axis=(0, 2))
        w_mat = self.w.value.reshape(self.out_ch, c * k * k)
        dcols = np.matmul(w_mat.T, dout_mat).reshape(n, c, k, k, ho, wo)
        dxp = np.zeros((n, c, h + 2 * pad, w + 2 * pad), dtype=dout.dtype)
        for i in range(k):
            for j in range(k):
                dxp[:, :, i : i + s * ho : s, j : j + s * wo : s] += dcols[:, :, i, j]
        return dxp[:, :, pad : pad + h, pad : pad + w]


class ReLU:
    def __init__(self):
        self._masks = []

    def params(self):
        return []

    def reset(self):
        self._masks.clear()

    def forward(self, x):
        mask = x > 0
        self._masks.append(mask)
        return x * mask

    def backward(self, dout):
        return dout * self._masks.pop()


class GlobalAvgPool:
    """(N, C, H, W) -> (N, C) spatial mean."""

    def __init__(self):
        self._shape = None

    def params(self):
        return []

    def reset(self):
        self._shape = None

    def forward(self, x):
        self._shape = x.shape
        return x.mean(axis=(2, 3))

    def backward(self, dout):
        n, c, h, w = self._shape
        return np.broadcast_to(dout[:, :, None, None], (n, c, h, w)) / (h * w)


class Dense:
    def __init__(self, in_features, out_features, rng=None, name="dense"):
        bound = np.sqrt(6.0 / in_features)
        rng = rng if rng is not None else np.random.default_rng()
        self.w = Param(f"{name}.w", rng.uniform(-bound, bound, size=(in_features, out_features)))
        self.b = Param(f"{name}.b", np.zeros(out_features), is_bias=True)
        self._x = None

    def params(self):
        return [self.w, self.b]

    def reset(self):
        self._x = None

    def forward(self, x):
        self._x = x
        return x @ self.w.value + self.b.value

    def backward(self, dout):
        if self.w.trainable:
            self.w.grad += self._x.T @ dout
        if self.b.trainable:
            self.b.grad += dout.sum(axis=0)
        return dout @ self.w.value.T


class UpsampleNearest2x:
    """Exact 2x nearest-neighbor upsampling with summing backward."""

    def params(self):
        return []

    def reset(self):
        pass

    def forward(self, x):
        return np.repeat(np.repeat(x, 2, axis=2), 2, axis=3)

    def backward(self, dout):
        n, c, h, w = dout.shape
        return dout.reshape(n, c, h // 2, 2, w // 2, 2).sum(axis=(3, 5))


def sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def bilinear_resize(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Separable bilinear resize of a 2-D array (align-corners-free)."""
    in_h, in_w = img.shape
    ys = (np.arange(out_h) + 0.5) * in_h / out_h - 0.5
    xs = (np.arange(out_w) + 0.5) * in_w / out_w - 0.5
    ys = np.clip(ys, 0, in_h - 1)
    xs = np.clip(xs, 0, in_w - 1)
    y0 = np.floor(ys).astype(int)
    x0 = np.floor(xs).astype(int)
    y1 = np.minimum(y0 + 1, in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    wy = (ys - y0)[:, None]
    wx = (xs - x0)[None, :]
    top = img[np.ix_(y0, x0)] * (1 - wx) + img[np.ix_(y0, x1)] * wx
    bot = img[np.ix_(y1, x0)] * (1 - wx) + img[np.ix_(y1, x1)] * wx
    return top * (1 - wy) + bot * wy
