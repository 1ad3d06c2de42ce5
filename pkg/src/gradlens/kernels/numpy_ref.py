"""Pure-numpy implementations of the batched dense-layer kernels.

Reference semantics for the compiled backend; also the fallback used when
the extension is unavailable. Both backends implement the same two calls:

    forward_batch(x, weights, bias, relu)          -> (z, a)
    backward_batch(x, weights, z, grad_a, mask, relu, scale) -> (gw, gb, gx)

Shapes: x is (batch, n_in), weights is (n_out, n_in), z/a/grad_a are
(batch, n_out). mask, when given, is a per-neuron 0/1 vector of length n_out
multiplied into grad_a before the local gradient is formed, so masked
neurons contribute nothing to the weight, bias, or input gradients.
"""

from __future__ import annotations

import numpy as np


def forward_batch(x, weights, bias, relu):
    z = x @ weights.T + bias
    a = np.maximum(z, 0.0) if relu else z.copy()
    return z, a


def backward_batch(x, weights, z, grad_a, mask, relu, scale):
    delta = grad_a if mask is None else grad_a * mask
    if relu:
        delta = delta * (z > 0.0)
    gw = delta.T @ x
    gb = delta.sum(axis=0)
    if scale != 1.0:
        gw *= scale
        gb *= scale
    gx = delta @ weights
    return gw, gb, gx
