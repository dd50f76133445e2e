"""Optimizers and the plateau learning-rate rule."""

from __future__ import annotations

import numpy as np

__all__ = ["MomentumSGD", "Adam", "ReduceLROnPlateau"]


class MomentumSGD:
    """Classic momentum: v = mu * v + g; p -= lr * v."""

    def __init__(self, params, lr: float, momentum: float = 0.9):
        self.params = list(params)
        self.lr = lr
        self.momentum = momentum
        self._velocity = [np.zeros_like(p.value) for p in self.params]

    def step(self):
        for p, v in zip(self.params, self._velocity):
            if not p.trainable:
                continue
            v *= self.momentum
            v += p.grad
            p.value -= self.lr * v


class Adam:
    """Adaptive moment estimation with bias correction."""

    def __init__(self, params, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self._m = [np.zeros_like(p.value) for p in self.params]
        self._v = [np.zeros_like(p.value) for p in self.params]
        self._t = 0

    def step(self):
        self._t += 1
        b1, b2 = self.beta1, self.beta2
        bias1 = 1 - b1**self._t
        bias2 = 1 - b2**self._t
        for p, m, v in zip(self.params, self._m, self._v):
            if not p.trainable:
                continue
            m *= b1
            m += (1 - b1) * p.grad
            v *= b2
            v += (1 - b2) * p.grad**2
            p.value -= self.lr * (m / bias1) / (np.sqrt(v / bias2) + self.eps)


class ReduceLROnPlateau:
    """Multiply the optimizer's learning rate by ``factor`` after ``patience``
    consecutive epochs without an improvement larger than ``min_delta``."""

    def __init__(self, optimizer, factor: float = 0.2, patience: int = 3, min_delta: float = 1e-4):
        self.optimizer = optimizer
        self.factor = factor
        self.patience = patience
        self.min_delta = min_delta
        self.best: float | None = None
        self.bad_epochs = 0

    def step(self, loss: float) -> bool:
        """Feed one epoch's monitored loss; returns True if the rate was cut."""
        if self.best is None or loss < self.best - self.min_delta:
            self.best = loss
            self.bad_epochs = 0
            return False
        self.bad_epochs += 1
        if self.bad_epochs >= self.patience:
            self.optimizer.lr *= self.factor
            self.bad_epochs = 0
            return True
        return False
