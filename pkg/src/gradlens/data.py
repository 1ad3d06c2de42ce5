"""Tabular dataset ingestion, splitting, and standardization.

Datasets arrive as headered CSV files. A schema names the target column,
the task, and any categorical feature columns; everything else must be
numeric. A registry file (JSON) maps dataset names to paths plus schemas so
experiments can refer to datasets by name.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import pandas as pd

log = logging.getLogger(__name__)

ONE_HOT_MAX_CARDINALITY = 16
_NA_VALUES = ["?"]

__all__ = [
    "DataError",
    "Dataset",
    "Standardizer",
    "DatasetSchema",
    "load_csv",
    "split",
    "standardize_fit",
    "standardize_apply",
    "target_sigma",
    "load_registry",
    "save_registry",
    "resolve_dataset",
]


class DataError(ValueError):
    """Raised for unusable dataset files or schemas."""


@dataclass(frozen=True)
class DatasetSchema:
    target_column: str
    task: str  # "regression" | "classification"
    categorical_columns: tuple[str, ...] = ()

    def __post_init__(self):
        if self.task not in ("regression", "classification"):
            raise DataError(f"unknown task {self.task!r}")


@dataclass(frozen=True)
class Dataset:
    """Feature matrix plus targets; immutable once constructed."""

    features: np.ndarray  # (n, d) float64
    targets: np.ndarray  # (n,) float64 or int64 class indices
    task: str
    num_classes: int | None = None
    feature_names: tuple[str, ...] = ()
    label_names: tuple[str, ...] = ()  # classification: original label per index

    def __post_init__(self):
        feats = np.ascontiguousarray(self.features, dtype=np.float64)
        object.__setattr__(self, "features", feats)
        if feats.ndim != 2:
            raise DataError("features must be 2-d")
        if not np.isfinite(feats).all():
            raise DataError("features contain non-finite values")
        if self.task == "classification":
            t = np.asarray(self.targets, dtype=np.int64)
            if self.num_classes is None or self.num_classes < 2:
                raise DataError("classification datasets need num_classes >= 2")
            if t.size and (t.min() < 0 or t.max() >= self.num_classes):
                raise DataError("class indices out of range")
        else:
            t = np.asarray(self.targets, dtype=np.float64)
            if not np.isfinite(t).all():
                raise DataError("targets contain non-finite values")
        object.__setattr__(self, "targets", t)
        if feats.shape[0] != t.shape[0]:
            raise DataError("features and targets disagree on the number of rows")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def take(self, idx: np.ndarray) -> "Dataset":
        return replace(self, features=self.features[idx], targets=self.targets[idx])


def load_csv(path, schema: DatasetSchema) -> Dataset:
    """Read a headered CSV into a Dataset.

    Rows with missing values are dropped (count logged). Categorical columns
    are one-hot encoded when they have at most ONE_HOT_MAX_CARDINALITY
    distinct values, integer-coded otherwise; the encoding order is sorted,
    so loading is deterministic. Classification targets are mapped to
    contiguous indices 0..K-1 in sorted label order.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"dataset file not found: {path}")
    try:
        df = pd.read_csv(path, na_values=_NA_VALUES)
    except Exception as exc:
        raise DataError(f"could not parse {path}: {exc}") from exc
    if schema.target_column not in df.columns:
        raise DataError(
            f"target column {schema.target_column!r} not in {path.name} "
            f"(columns: {', '.join(df.columns)})"
        )
    for col in schema.categorical_columns:
        if col not in df.columns:
            raise DataError(f"categorical column {col!r} not in {path.name}")

    before = len(df)
    df = df.dropna()
    dropped = before - len(df)
    if dropped:
        log.info("dropped %d rows with missing values from %s", dropped, path.name)
    if not len(df):
        raise DataError(f"{path.name} has no complete rows")

    target = df[schema.target_column]
    feature_df = df.drop(columns=[schema.target_column])

    columns: list[np.ndarray] = []
    names: list[str] = []
    for col in feature_df.columns:
        series = feature_df[col]
        if col in schema.categorical_columns:
            values = sorted(map(str, series.astype(str).unique()))
            if len(values) <= ONE_HOT_MAX_CARDINALITY:
                as_str = series.astype(str)
                for v in values:
                    columns.append((as_str == v).to_numpy(dtype=np.float64))
                    names.append(f"{col}={v}")
            else:
                mapping = {v: i for i, v in enumerate(values)}
                columns.append(series.astype(str).map(mapping).to_numpy(dtype=np.float64))
                names.append(col)
        else:
            try:
                columns.append(series.to_numpy(dtype=np.float64))
            except (TypeError, ValueError) as exc:
                raise DataError(
                    f"column {col!r} in {path.name} is not numeric; declare it "
                    "categorical in the schema"
                ) from exc
            names.append(col)
    if not columns:
        raise DataError(f"{path.name} has no feature columns")
    features = np.column_stack(columns)

    if schema.task == "classification":
        labels = sorted(map(str, target.astype(str).unique()))
        mapping = {v: i for i, v in enumerate(labels)}
        targets = target.astype(str).map(mapping).to_numpy(dtype=np.int64)
        return Dataset(features, targets, "classification", num_classes=len(labels),
                       feature_names=tuple(names), label_names=tuple(labels))
    try:
        targets = target.to_numpy(dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise DataError(
            f"target column {schema.target_column!r} in {path.name} is not numeric"
        ) from exc
    return Dataset(features, targets, "regression", feature_names=tuple(names))


def split(dataset: Dataset, fraction: float, rng) -> tuple[Dataset, Dataset]:
    """Shuffled train/test split; stratified by class for classification."""
    if not 0.0 < fraction < 1.0:
        raise ValueError(f"split fraction must be in (0, 1), got {fraction}")
    n = dataset.n
    if dataset.task == "classification":
        train_idx: list[np.ndarray] = []
        test_idx: list[np.ndarray] = []
        for c in range(dataset.num_classes):
            members = np.flatnonzero(dataset.targets == c)
            perm = rng.gen.permutation(members)
            k = int(round(fraction * members.size))
            train_idx.append(perm[:k])
            test_idx.append(perm[k:])
        tr = np.sort(np.concatenate(train_idx))
        te = np.sort(np.concatenate(test_idx))
    else:
        perm = rng.gen.permutation(n)
        k = int(round(fraction * n))
        tr = np.sort(perm[:k])
        te = np.sort(perm[k:])
    if not tr.size or not te.size:
        raise ValueError(f"split fraction {fraction} leaves an empty side for n={n}")
    return dataset.take(tr), dataset.take(te)


@dataclass(frozen=True)
class Standardizer:
    """Per-feature location/scale fitted on the training split."""

    mean: np.ndarray
    std: np.ndarray


def standardize_fit(train: Dataset) -> Standardizer:
    if not train.n:
        raise ValueError("cannot fit a standardizer on an empty dataset")
    mean = train.features.mean(axis=0)
    std = train.features.std(axis=0)
    # constant columns: pin the mean to the constant (the rounded mean of n
    # identical values can differ in the last bit) and use unit scale, so the
    # transformed column is exactly zero
    constant = np.ptp(train.features, axis=0) == 0.0
    if constant.any():
        mean[constant] = train.features[0, constant]
        std[constant] = 1.0
    std = np.where(std > 0.0, std, 1.0)
    return Standardizer(mean, std)


def standardize_apply(std: Standardizer, dataset: Dataset) -> Dataset:
    feats = (dataset.features - std.mean) / std.std
    return replace(dataset, features=feats)


def target_sigma(train: Dataset) -> float:
    """Population standard deviation of the training targets.

    Classification targets enter as their numeric class indices.
    """
    if not train.n:
        raise ValueError("cannot compute target sigma on an empty dataset")
    return float(np.asarray(train.targets, dtype=np.float64).std())


# --- dataset registry -------------------------------------------------------

def load_registry(path) -> dict:
    path = Path(path)
    if not path.exists():
        return {}
    with open(path, encoding="utf-8") as fh:
        try:
            reg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataError(f"registry {path} is not valid JSON: {exc}") from exc
    if not isinstance(reg, dict):
        raise DataError(f"registry {path} must be a JSON object")
    return reg


def save_registry(path, registry: dict):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(registry, fh, indent=2, sort_keys=True)
        fh.write("\n")


def resolve_dataset(registry: dict, name: str, registry_path=None) -> tuple[Path, DatasetSchema]:
    """Look up a dataset by name; relative paths resolve against the registry file."""
    if name not in registry:
        known = ", ".join(sorted(registry)) or "none registered"
        raise DataError(f"unknown dataset {name!r} (known: {known})")
    entry = registry[name]
    try:
        schema = DatasetSchema(
            target_column=entry["target"],
            task=entry["task"],
            categorical_columns=tuple(entry.get("categorical", ())),
        )
        raw_path = Path(entry["path"])
    except KeyError as exc:
        raise DataError(f"registry entry for {name!r} is missing key {exc}") from exc
    if not raw_path.is_absolute() and registry_path is not None:
        raw_path = Path(registry_path).parent / raw_path
    return raw_path, schema
