"""Training engine for dense networks built from bidirectional layer maps,
with backward-pass-only gradient dropout, target-noise regularization, an
input-noise robustness benchmark, and a compose/detour public goods game
simulator."""

from .bench import RunResult, SweepConfig, TrainingDiverged, evaluate_under_noise, run_sweep, train
from .data import Dataset, DatasetSchema, Standardizer, load_csv, split, standardize_apply, \
    standardize_fit, target_sigma
from .kernels import BACKEND
from .lens import DenseParams, ForwardTape, NetworkSpec, init_params
from .masks import GradMaskPlan, gate, sample_masks
from .metrics import MetricCurve, UndefinedMetric
from .optim import Adam, SGD, make_optimizer
from .pgg import GameConfig, Trace, mean_field_oracle, tipping_point
from .stochastics import Rng, StableParams, TargetNoiseSpec, sample_stable

__version__ = "0.1.0"

__all__ = [
    "Adam",
    "BACKEND",
    "Dataset",
    "DatasetSchema",
    "DenseParams",
    "ForwardTape",
    "GameConfig",
    "GradMaskPlan",
    "MetricCurve",
    "NetworkSpec",
    "Rng",
    "RunResult",
    "SGD",
    "StableParams",
    "Standardizer",
    "SweepConfig",
    "TargetNoiseSpec",
    "Trace",
    "TrainingDiverged",
    "UndefinedMetric",
    "evaluate_under_noise",
    "gate",
    "init_params",
    "load_csv",
    "make_optimizer",
    "mean_field_oracle",
    "run_sweep",
    "sample_masks",
    "sample_stable",
    "split",
    "standardize_apply",
    "standardize_fit",
    "target_sigma",
    "tipping_point",
    "train",
]
