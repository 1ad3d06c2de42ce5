"""Parameter update rules: plain gradient descent and Adam.

Optimizers mutate the parameter arrays in place. Gradients are passed as
[(grad_weights, grad_bias)] in layer order, matching the output of the
network backward passes.
"""

from __future__ import annotations

import numpy as np

__all__ = ["SGD", "Adam", "make_optimizer"]


class SGD:
    """theta <- theta - lr * grad."""

    def __init__(self, lr: float = 1e-3):
        if lr <= 0:
            raise ValueError("learning rate must be > 0")
        self.lr = lr

    def step(self, params, grads):
        _check_shapes(params, grads)
        for p, (gw, gb) in zip(params, grads):
            p.weights -= self.lr * gw
            p.bias -= self.lr * gb


class Adam:
    """Bias-corrected adaptive moments (standard defaults)."""

    def __init__(self, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        if lr <= 0 or eps <= 0:
            raise ValueError("learning rate and eps must be > 0")
        if not (0.0 <= beta1 < 1.0 and 0.0 <= beta2 < 1.0):
            raise ValueError("betas must be in [0, 1)")
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m = None
        self._v = None

    def step(self, params, grads):
        _check_shapes(params, grads)
        if self._m is None:
            self._m = [(np.zeros_like(p.weights), np.zeros_like(p.bias)) for p in params]
            self._v = [(np.zeros_like(p.weights), np.zeros_like(p.bias)) for p in params]
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        for p, (gw, gb), (mw, mb), (vw, vb) in zip(params, grads, self._m, self._v):
            for theta, g, m, v in ((p.weights, gw, mw, vw), (p.bias, gb, mb, vb)):
                m *= self.beta1
                m += (1.0 - self.beta1) * g
                v *= self.beta2
                v += (1.0 - self.beta2) * (g * g)
                theta -= self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)


def _check_shapes(params, grads):
    if len(params) != len(grads):
        raise ValueError("params and grads have different layer counts")
    for k, (p, (gw, gb)) in enumerate(zip(params, grads)):
        if gw.shape != p.weights.shape or gb.shape != p.bias.shape:
            raise ValueError(f"gradient shapes at layer {k} do not match the parameters")


def make_optimizer(kind: str, lr: float):
    kind = kind.lower()
    if kind == "sgd":
        return SGD(lr)
    if kind == "adam":
        return Adam(lr)
    raise ValueError(f"unknown optimizer {kind!r} (expected sgd or adam)")
