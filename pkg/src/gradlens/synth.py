"""Synthetic tabular datasets for tests and desk-scale experiments.

The regression generator produces a smooth nonlinear response with additive
noise; the classification generator places Gaussian blobs around class
centroids. Both write plain headered CSVs compatible with load_csv.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .stochastics import Rng

__all__ = ["synth_regression", "synth_classification", "write_csv"]


def synth_regression(n: int, n_features: int, rng: Rng, noise_std: float = 0.5):
    """Features ~ N(0,1)^d with a mixed linear plus sinusoidal response."""
    gen = rng.gen
    x = gen.normal(0.0, 1.0, (n, n_features))
    w = gen.normal(0.0, 1.0, n_features)
    y = x @ w / np.sqrt(n_features)
    y = y + np.sin(2.0 * x[:, : max(1, n_features // 3)]).sum(axis=1)
    y = y + noise_std * gen.normal(0.0, 1.0, n)
    return x, y


def synth_classification(n: int, n_features: int, num_classes: int, rng: Rng,
                         spread: float = 1.0):
    """Gaussian blobs, one centroid per class, near-balanced class counts."""
    gen = rng.gen
    centroids = gen.normal(0.0, 2.0, (num_classes, n_features))
    labels = gen.integers(0, num_classes, n)
    x = centroids[labels] + spread * gen.normal(0.0, 1.0, (n, n_features))
    return x, labels.astype(np.int64)


def write_csv(path, features: np.ndarray, targets: np.ndarray,
              target_name: str = "target", feature_names=None):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n, d = features.shape
    if feature_names is None:
        feature_names = [f"f{i}" for i in range(d)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(feature_names) + [target_name])
        for i in range(n):
            row = [repr(float(v)) for v in features[i]]
            t = targets[i]
            row.append(str(int(t)) if np.issubdtype(targets.dtype, np.integer) else repr(float(t)))
            writer.writerow(row)
    return path
