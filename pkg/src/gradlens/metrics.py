"""Evaluation metrics: accuracy, macro F1, ROC AUC, MSE, and SMAPE.

Binary ROC AUC is computed from the Mann-Whitney rank statistic with
average ranks for ties; multi-class AUC is the unweighted mean of
one-vs-rest AUCs over the classes present in the labels. A metric that is
undefined on the given data (AUC with a single class) raises
UndefinedMetric so callers can record it as missing rather than zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "UndefinedMetric",
    "MetricCurve",
    "accuracy",
    "f1_macro",
    "roc_auc",
    "roc_auc_ovr",
    "mse",
    "smape",
]


class UndefinedMetric(ValueError):
    """The metric has no defined value on this input."""


def _check_lengths(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape[0] != b.shape[0]:
        raise ValueError("inputs have different lengths")
    if a.shape[0] == 0:
        raise ValueError("inputs are empty")
    return a, b


def accuracy(predicted, actual) -> float:
    predicted, actual = _check_lengths(predicted, actual)
    return float(np.mean(predicted == actual))


def f1_macro(predicted, actual, num_classes: int) -> float:
    """Per-class F1 averaged uniformly over all num_classes classes.

    A class with zero precision + recall contributes 0.
    """
    predicted, actual = _check_lengths(predicted, actual)
    scores = []
    for c in range(num_classes):
        tp = np.sum((predicted == c) & (actual == c))
        fp = np.sum((predicted == c) & (actual != c))
        fn = np.sum((predicted != c) & (actual == c))
        denom = 2 * tp + fp + fn
        scores.append(2 * tp / denom if denom else 0.0)
    return float(np.mean(scores))


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties assigned the mean rank of their group."""
    order = np.argsort(values, kind="mergesort")
    ranks = np.empty(values.size, dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def roc_auc(scores, labels) -> float:
    """Binary AUC via the rank statistic; labels are 0/1."""
    scores, labels = _check_lengths(scores, labels)
    labels = np.asarray(labels).astype(np.int64)
    n_pos = int(np.sum(labels == 1))
    n_neg = int(np.sum(labels == 0))
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetric("ROC AUC needs both classes present")
    ranks = _average_ranks(np.asarray(scores, dtype=np.float64))
    pos_rank_sum = ranks[labels == 1].sum()
    return float((pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def roc_auc_ovr(probabilities, labels, num_classes: int) -> float:
    """Unweighted mean of one-vs-rest AUCs over the classes present."""
    probabilities = np.asarray(probabilities, dtype=np.float64)
    labels = np.asarray(labels).astype(np.int64)
    if probabilities.ndim != 2 or probabilities.shape[1] != num_classes:
        raise ValueError("probabilities must be (n, num_classes)")
    present = [c for c in range(num_classes) if np.any(labels == c)]
    if len(present) < 2:
        raise UndefinedMetric("one-vs-rest AUC needs at least two classes present")
    aucs = [roc_auc(probabilities[:, c], (labels == c).astype(np.int64)) for c in present]
    return float(np.mean(aucs))


def mse(pred, actual) -> float:
    pred, actual = _check_lengths(pred, actual)
    diff = np.asarray(pred, dtype=np.float64) - np.asarray(actual, dtype=np.float64)
    return float(np.mean(diff * diff))


def smape(pred, actual) -> float:
    """Symmetric mean absolute percentage error in [0, 200].

    Terms where both |pred| and |actual| are zero are defined as 0.
    """
    pred, actual = _check_lengths(pred, actual)
    pred = np.asarray(pred, dtype=np.float64)
    actual = np.asarray(actual, dtype=np.float64)
    denom = (np.abs(actual) + np.abs(pred)) / 2.0
    terms = np.zeros_like(denom)
    nz = denom > 0.0
    terms[nz] = np.abs(pred[nz] - actual[nz]) / denom[nz]
    return float(100.0 * np.mean(terms))


@dataclass(frozen=True)
class MetricCurve:
    """A metric as a function of input-noise amplitude.

    points are (amplitude, value, stderr) with strictly increasing
    amplitudes. NaN values mark a metric recorded as missing.
    """

    metric_name: str
    points: tuple

    def __post_init__(self):
        pts = tuple((float(a), float(v), float(s)) for a, v, s in self.points)
        amps = [a for a, _, _ in pts]
        if any(b <= a for a, b in zip(amps, amps[1:])):
            raise ValueError("amplitudes must be strictly increasing")
        for _, v, s in pts:
            if np.isinf(v) or np.isinf(s):
                raise ValueError("curve values must not be infinite")
        object.__setattr__(self, "points", pts)

    @property
    def amplitudes(self) -> np.ndarray:
        return np.array([a for a, _, _ in self.points])

    @property
    def values(self) -> np.ndarray:
        return np.array([v for _, v, _ in self.points])

    @property
    def stderrs(self) -> np.ndarray:
        return np.array([s for _, _, s in self.points])
