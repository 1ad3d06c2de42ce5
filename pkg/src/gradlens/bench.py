"""Training loop and input-noise robustness sweep.

A sweep trains one model per cell of (keep probability p) x (target-noise
strategy) x (seed), then evaluates each trained model on the test split
under increasing amplitudes of uniform input noise, recording one metric
curve per task metric. Every cell derives all of its randomness from its own
seed through labeled substreams (weight init, mask draws, target noise,
batch order, and evaluation noise are independent streams), so cells are
reproducible in isolation and enabling one stochastic component never
perturbs another.

Cell results are persisted as per-cell fragment files written atomically
(temp file + rename); the final results/losses CSVs are assembled from the
fragments in grid order. Interrupted sweeps therefore resume by skipping
cells whose fragments exist, and the assembled output is byte-identical to
an uninterrupted run.
"""

from __future__ import annotations

import json
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import lens, metrics
from .data import (
    Dataset,
    load_csv,
    resolve_dataset,
    split,
    standardize_apply,
    standardize_fit,
    target_sigma,
)
from .masks import sample_masks
from .optim import make_optimizer
from .stochastics import Rng, TargetNoiseSpec, noise_class_targets, noise_inputs, noise_targets

log = logging.getLogger(__name__)

DEFAULT_P_GRID = (0.0, 0.01, 0.05, 0.5, 0.9, 0.95, 0.99)
DEFAULT_AMPLITUDES = tuple(round(0.2 * i, 10) for i in range(11))  # 0.0 .. 2.0
REGRESSION_METRICS = ("mse", "smape")
CLASSIFICATION_METRICS = ("accuracy", "f1_macro", "roc_auc")

RESULTS_HEADER = "dataset,seed,p,target_noise,amplitude,metric,value,stderr"
LOSSES_HEADER = "dataset,seed,p,target_noise,epoch,train_loss"

__all__ = [
    "TrainingDiverged",
    "SweepConfig",
    "RunResult",
    "train",
    "evaluate_under_noise",
    "evaluate_clean",
    "run_sweep",
    "cell_grid",
]


class TrainingDiverged(RuntimeError):
    """Training loss became non-finite."""


def _fmt(x: float) -> str:
    return f"{x:g}"


@dataclass(frozen=True)
class SweepConfig:
    """Full description of one sweep over a single dataset."""

    dataset: str
    p_grid: tuple = DEFAULT_P_GRID
    target_noises: tuple = (TargetNoiseSpec.none(),)
    seeds: tuple = (0,)
    amplitudes: tuple = DEFAULT_AMPLITUDES
    repetitions: int = 8
    epochs: int = 50
    batch_size: int = 64
    optimizer: str = "adam"
    learning_rate: float = 1e-3
    split_fraction: float = 0.8
    hidden_layers: int = 5
    hidden_width: int = 150

    def __post_init__(self):
        if not self.p_grid or not self.target_noises or not self.seeds:
            raise ValueError("p_grid, target_noises, and seeds must be non-empty")
        for p in self.p_grid:
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"p must be in [0, 1], got {p}")
        amps = tuple(float(a) for a in self.amplitudes)
        if any(a < 0 for a in amps):
            raise ValueError("amplitudes must be >= 0")
        if any(b <= a for a, b in zip(amps, amps[1:])):
            raise ValueError("amplitudes must be strictly increasing")
        if self.repetitions < 1 or self.epochs < 1 or self.batch_size < 1:
            raise ValueError("repetitions, epochs, and batch_size must be >= 1")
        noises = tuple(
            TargetNoiseSpec.parse(s) if isinstance(s, str) else s for s in self.target_noises
        )
        object.__setattr__(self, "target_noises", noises)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "p_grid", tuple(float(p) for p in self.p_grid))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))


@dataclass
class Cell:
    """One grid point of a sweep."""

    index: int
    dataset: str
    p: float
    noise: TargetNoiseSpec
    seed: int

    @property
    def key(self) -> str:
        return f"cell{self.index:04d}_p{_fmt(self.p)}_{self.noise.name}_seed{self.seed}"


def cell_grid(config: SweepConfig) -> list[Cell]:
    cells = []
    i = 0
    for p in config.p_grid:
        for noise in config.target_noises:
            for seed in config.seeds:
                cells.append(Cell(i, config.dataset, p, noise, seed))
                i += 1
    return cells


@dataclass
class RunResult:
    """Outcome of one trained and evaluated cell."""

    dataset: str
    seed: int
    p: float
    target_noise: str
    loss_history: list
    curves: list
    duration_s: float


def network_spec_for(dataset: Dataset, config: SweepConfig) -> lens.NetworkSpec:
    """Network architecture implied by a dataset and sweep settings."""
    if dataset.task == "classification":
        return lens.NetworkSpec(
            input_dim=dataset.n_features,
            output_dim=dataset.num_classes,
            hidden_layers=config.hidden_layers,
            hidden_width=config.hidden_width,
            task="classification",
        )
    return lens.NetworkSpec(
        input_dim=dataset.n_features,
        output_dim=1,
        hidden_layers=config.hidden_layers,
        hidden_width=config.hidden_width,
        task="regression",
    )


def train(
    spec: lens.NetworkSpec,
    train_ds: Dataset,
    p: float | None,
    target_noise: TargetNoiseSpec,
    optimizer,
    epochs: int,
    batch_size: int,
    rng: Rng,
):
    """Train a network; returns (params, per-epoch mean training loss).

    p is the per-neuron gradient keep probability; None disables masking
    entirely (the reference backpropagation path). Targets are re-noised at
    the start of every epoch; masks are re-sampled every step; the loss
    history records the mean loss per epoch against the noisy targets.
    Raises TrainingDiverged if an epoch loss is not finite.
    """
    if p is not None and not 0.0 <= p <= 1.0:
        raise ValueError(f"keep probability must be in [0, 1], got {p}")
    if epochs < 1 or batch_size < 1:
        raise ValueError("epochs and batch_size must be >= 1")

    init_rng = rng.substream("init")
    mask_rng = rng.substream("masks")
    noise_rng = rng.substream("target_noise")
    order_rng = rng.substream("batch_order")

    params = lens.init_params(spec, init_rng)
    sigma_y = target_sigma(train_ds)
    x = np.ascontiguousarray(train_ds.features)
    y = train_ds.targets
    n = train_ds.n
    classification = spec.task == "classification"

    loss_history = []
    for epoch in range(epochs):
        epoch_noise = noise_rng.substream(epoch)
        if classification:
            y_epoch = noise_class_targets(y, target_noise, sigma_y, spec.output_dim, epoch_noise)
        else:
            y_epoch = noise_targets(y, target_noise, sigma_y, epoch_noise)

        order = order_rng.gen.permutation(n)
        total = 0.0
        for start in range(0, n, batch_size):
            batch = order[start : start + batch_size]
            xb = np.ascontiguousarray(x[batch])
            yb = y_epoch[batch]
            out, tape = lens.network_forward_batch(spec, params, xb)
            if classification:
                loss, grad = lens.softmax_cross_entropy_batch(out, yb)
            else:
                loss, grad = lens.mse_loss_batch(out, yb)
            plan = sample_masks(spec, p, mask_rng) if p is not None else None
            grads = lens.network_backward_batch(spec, params, tape, grad, plan)
            optimizer.step(params, grads)
            total += loss * batch.size
        epoch_loss = total / n
        if not np.isfinite(epoch_loss):
            raise TrainingDiverged(f"epoch {epoch}: training loss is {epoch_loss}")
        loss_history.append(epoch_loss)
    return params, loss_history


def _task_metrics(task: str) -> tuple:
    return CLASSIFICATION_METRICS if task == "classification" else REGRESSION_METRICS


def _compute_metrics(spec, params, features, test: Dataset) -> dict:
    out = lens.predict_batch(spec, params, features)
    values = {}
    if test.task == "classification":
        predicted = out.argmax(axis=1)
        probs = lens.softmax_probs(out)
        values["accuracy"] = metrics.accuracy(predicted, test.targets)
        values["f1_macro"] = metrics.f1_macro(predicted, test.targets, test.num_classes)
        try:
            if test.num_classes == 2:
                values["roc_auc"] = metrics.roc_auc(probs[:, 1], test.targets)
            else:
                values["roc_auc"] = metrics.roc_auc_ovr(probs, test.targets, test.num_classes)
        except metrics.UndefinedMetric:
            values["roc_auc"] = float("nan")
    else:
        pred = out[:, 0]
        values["mse"] = metrics.mse(pred, test.targets)
        values["smape"] = metrics.smape(pred, test.targets)
    return values


def evaluate_under_noise(
    spec: lens.NetworkSpec,
    params,
    test: Dataset,
    amplitudes,
    repetitions: int,
    rng: Rng,
) -> list[metrics.MetricCurve]:
    """Measure every task metric as input-noise amplitude grows.

    Each (amplitude, repetition) pair perturbs the standardized test
    features with fresh uniform noise from its own substream; curve points
    are the mean over repetitions with the standard error across them.
    """
    if not test.n:
        raise ValueError("test set is empty")
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    names = _task_metrics(test.task)
    points: dict = {m: [] for m in names}
    for ai, amplitude in enumerate(amplitudes):
        samples: dict = {m: [] for m in names}
        for rep in range(repetitions):
            noisy = noise_inputs(test.features, amplitude, rng.substream("eval", ai, rep))
            vals = _compute_metrics(spec, params, noisy, test)
            for m in names:
                samples[m].append(vals[m])
        for m in names:
            arr = np.array(samples[m])
            value = float(arr.mean())
            stderr = float(arr.std(ddof=1) / np.sqrt(len(arr))) if len(arr) > 1 else 0.0
            points[m].append((float(amplitude), value, stderr))
    return [metrics.MetricCurve(m, tuple(points[m])) for m in names]


def evaluate_clean(spec, params, test: Dataset) -> dict:
    """Task metrics on the unperturbed test features."""
    return _compute_metrics(spec, params, test.features, test)


# --- sweep persistence -------------------------------------------------------

def _atomic_write(path: Path, text: str):
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _result_rows(cell: Cell, curves) -> str:
    rows = []
    for curve in curves:
        for amplitude, value, stderr in curve.points:
            rows.append(
                f"{cell.dataset},{cell.seed},{_fmt(cell.p)},{cell.noise.name},"
                f"{_fmt(amplitude)},{curve.metric_name},{value!r},{stderr!r}"
            )
    return "\n".join(rows) + "\n"


def _loss_rows(cell: Cell, loss_history) -> str:
    rows = [
        f"{cell.dataset},{cell.seed},{_fmt(cell.p)},{cell.noise.name},{epoch},{loss!r}"
        for epoch, loss in enumerate(loss_history)
    ]
    return "\n".join(rows) + "\n"


def _parse_curves(rows_text: str, task: str) -> list[metrics.MetricCurve]:
    by_metric: dict = {}
    for line in rows_text.strip().splitlines():
        parts = line.split(",")
        amplitude, metric, value, stderr = parts[4], parts[5], parts[6], parts[7]
        by_metric.setdefault(metric, []).append(
            (float(amplitude), float(value), float(stderr))
        )
    return [
        metrics.MetricCurve(m, tuple(by_metric[m]))
        for m in _task_metrics(task)
        if m in by_metric
    ]


def run_cell(cell: Cell, train_ds: Dataset, test_ds: Dataset, config: SweepConfig) -> RunResult:
    """Train and evaluate one grid cell, fully determined by the cell seed."""
    started = time.monotonic()
    rng = Rng(cell.seed)
    spec = network_spec_for(train_ds, config)
    optimizer = make_optimizer(config.optimizer, config.learning_rate)
    params, loss_history = train(
        spec, train_ds, cell.p, cell.noise, optimizer,
        config.epochs, config.batch_size, rng,
    )
    curves = evaluate_under_noise(
        spec, params, test_ds, config.amplitudes, config.repetitions, rng
    )
    return RunResult(
        dataset=cell.dataset,
        seed=cell.seed,
        p=cell.p,
        target_noise=cell.noise.name,
        loss_history=loss_history,
        curves=curves,
        duration_s=time.monotonic() - started,
    )


def prepare_splits(dataset: Dataset, config: SweepConfig, seed: int):
    """Split and standardize for one cell seed; fit statistics on train only."""
    rng = Rng(seed)
    train_ds, test_ds = split(dataset, config.split_fraction, rng.substream("split"))
    std = standardize_fit(train_ds)
    return standardize_apply(std, train_ds), standardize_apply(std, test_ds)


def _run_cell_to_files(args):
    cell, dataset, config, cells_dir = args
    cells_dir = Path(cells_dir)
    try:
        train_ds, test_ds = prepare_splits(dataset, config, cell.seed)
        result = run_cell(cell, train_ds, test_ds, config)
    except TrainingDiverged as exc:
        _atomic_write(
            cells_dir / f"{cell.key}.failed.json",
            json.dumps({"cell": cell.key, "error": str(exc)}, indent=2) + "\n",
        )
        log.warning("cell %s aborted: %s", cell.key, exc)
        return None
    _atomic_write(cells_dir / f"{cell.key}.results.csv", _result_rows(cell, result.curves))
    _atomic_write(cells_dir / f"{cell.key}.losses.csv", _loss_rows(cell, result.loss_history))
    _atomic_write(
        cells_dir / f"{cell.key}.meta.json",
        json.dumps({"duration_s": result.duration_s}) + "\n",
    )
    return result


def _load_completed(cell: Cell, cells_dir: Path, task: str) -> RunResult | None:
    results_path = cells_dir / f"{cell.key}.results.csv"
    if not results_path.exists():
        return None
    losses_path = cells_dir / f"{cell.key}.losses.csv"
    meta_path = cells_dir / f"{cell.key}.meta.json"
    curves = _parse_curves(results_path.read_text(encoding="utf-8"), task)
    loss_history = [
        float(line.split(",")[5])
        for line in losses_path.read_text(encoding="utf-8").strip().splitlines()
    ]
    duration = 0.0
    if meta_path.exists():
        duration = float(json.loads(meta_path.read_text(encoding="utf-8"))["duration_s"])
    return RunResult(cell.dataset, cell.seed, cell.p, cell.noise.name,
                     loss_history, curves, duration)


def run_sweep(
    config: SweepConfig,
    registry: dict,
    out_dir,
    *,
    registry_path=None,
    jobs: int = 1,
    resume: bool = False,
    progress=None,
) -> list[RunResult]:
    """Run every cell of the sweep and assemble the output tables.

    With resume=True, cells whose fragment files already exist are skipped.
    Returns the RunResults of all cells that completed successfully, in grid
    order. The assembled results.csv and losses.csv are byte-deterministic
    functions of the config and registry contents.
    """
    out_dir = Path(out_dir)
    cells_dir = out_dir / "cells"
    cells_dir.mkdir(parents=True, exist_ok=True)

    path, schema = resolve_dataset(registry, config.dataset, registry_path)
    dataset = load_csv(path, schema)  # fail fast before any training

    cells = cell_grid(config)
    pending = []
    for cell in cells:
        done = (cells_dir / f"{cell.key}.results.csv").exists() or (
            cells_dir / f"{cell.key}.failed.json"
        ).exists()
        if resume and done:
            continue
        pending.append(cell)

    work = [(cell, dataset, config, str(cells_dir)) for cell in pending]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for cell, _ in zip(pending, pool.map(_run_cell_to_files, work)):
                if progress:
                    progress(cell)
    else:
        for item in work:
            _run_cell_to_files(item)
            if progress:
                progress(item[0])

    results = []
    result_blocks = [RESULTS_HEADER + "\n"]
    loss_blocks = [LOSSES_HEADER + "\n"]
    for cell in cells:
        loaded = _load_completed(cell, cells_dir, dataset.task)
        if loaded is None:
            continue
        results.append(loaded)
        result_blocks.append((cells_dir / f"{cell.key}.results.csv").read_text(encoding="utf-8"))
        loss_blocks.append((cells_dir / f"{cell.key}.losses.csv").read_text(encoding="utf-8"))
    _atomic_write(out_dir / "results.csv", "".join(result_blocks))
    _atomic_write(out_dir / "losses.csv", "".join(loss_blocks))
    return results
