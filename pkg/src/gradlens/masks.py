"""Per-neuron Bernoulli masks gating the backward pass.

A mask plan holds one 0/1 vector per layer (every hidden layer and the
output layer). During the backward pass the incoming activation gradient of
neuron j is multiplied by its mask entry, so a zeroed neuron contributes
nothing to its weight and bias gradients or to the coutility it propagates.
The forward pass is never touched, and surviving gradients are not rescaled:
keep probability 1 reproduces standard backpropagation exactly, and keep
probability 0 freezes the parameters entirely.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lens import NetworkSpec

__all__ = ["GradMaskPlan", "sample_masks", "gate"]


@dataclass
class GradMaskPlan:
    """Sampled masks for one training step."""

    p: float
    per_layer_masks: list

    def __post_init__(self):
        for k, m in enumerate(self.per_layer_masks):
            m = np.asarray(m, dtype=np.float64)
            if m.ndim != 1:
                raise ValueError(f"mask {k} must be 1-d")
            if not np.isin(m, (0.0, 1.0)).all():
                raise ValueError(f"mask {k} has entries outside {{0, 1}}")
            self.per_layer_masks[k] = m


def sample_masks(spec: NetworkSpec, p: float, rng) -> GradMaskPlan:
    """Draw an independent Bernoulli(p) keep decision per neuron per layer."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"keep probability must be in [0, 1], got {p}")
    layer_masks = [
        (rng.gen.random(width) < p).astype(np.float64) for width in spec.layer_widths()
    ]
    return GradMaskPlan(p, layer_masks)


def gate(grad_a: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Multiply an activation gradient by a 0/1 mask, entrywise."""
    grad_a = np.asarray(grad_a, dtype=np.float64)
    mask = np.asarray(mask, dtype=np.float64)
    if grad_a.shape != mask.shape:
        raise ValueError(f"gradient shape {grad_a.shape} != mask shape {mask.shape}")
    return grad_a * mask
