"""Plain-text configuration files and run manifests.

Config files are INI-style: flat key = value pairs under [section] headers.
Every key has a documented default; unknown sections or keys are rejected
by name. Command-line flags override file values, and the fully resolved
configuration is written as a manifest next to each run's outputs so any
result can be regenerated.
"""

from __future__ import annotations

import configparser
import os
from pathlib import Path

__all__ = ["ConfigError", "AppConfig", "DEFAULTS", "load_config", "write_manifest",
           "OUTPUT_DIR_ENV"]

OUTPUT_DIR_ENV = "GRADLENS_OUTPUT_DIR"

# section -> key -> (default as string, help text)
DEFAULTS: dict = {
    "run": {
        "root_seed": ("0", "root seed for all randomness"),
        "output_dir": ("runs", f"output directory (env {OUTPUT_DIR_ENV} overrides)"),
        "registry": ("datasets.json", "path to the dataset registry file"),
    },
    "network": {
        "hidden_layers": ("5", "number of hidden layers"),
        "hidden_width": ("150", "neurons per hidden layer"),
    },
    "train": {
        "dataset": ("", "registered dataset name (required)"),
        "p": ("1", "gradient keep probability in [0, 1]"),
        "target_noise": ("NoNoise", "target-noise strategy name"),
        "epochs": ("50", "training epochs"),
        "batch_size": ("64", "mini-batch size"),
        "optimizer": ("adam", "optimizer: adam or sgd"),
        "learning_rate": ("0.001", "optimizer learning rate"),
        "split_fraction": ("0.8", "train fraction of the train/test split"),
    },
    "sweep": {
        "dataset": ("", "registered dataset name (required)"),
        "p_grid": ("0,0.01,0.05,0.5,0.9,0.95,0.99", "comma-separated keep probabilities"),
        "target_noises": ("NoNoise", "comma-separated target-noise strategy names"),
        "seeds": ("0", "comma-separated cell seeds"),
        "amplitudes": ("0,0.2,0.4,0.6,0.8,1,1.2,1.4,1.6,1.8,2",
                       "comma-separated input-noise amplitudes"),
        "repetitions": ("8", "noise repetitions per amplitude"),
        "epochs": ("50", "training epochs per cell"),
        "batch_size": ("64", "mini-batch size"),
        "optimizer": ("adam", "optimizer: adam or sgd"),
        "learning_rate": ("0.001", "optimizer learning rate"),
        "split_fraction": ("0.8", "train fraction of the train/test split"),
        "plots": ("false", "also write an SVG plot per metric"),
    },
    "simulate": {
        "modes": ("baseline", "comma-separated simulation modes"),
        "players": ("200", "number of agents"),
        "kappa": ("2", "benefit factor"),
        "cost": ("0.5", "compose cost"),
        "tau": ("0.1", "softmax exploration temperature"),
        "p": ("1", "gradient-dropout update probability"),
        "pd": ("1", "classical-dropout keep-active probability"),
        "benefit_mode": ("shared", "payoff variant: shared or contingent"),
        "q_learning_rate": ("0.1", "action-value learning rate in (0, 1]"),
        "rounds": ("1000", "number of rounds"),
        "init": ("0.5", "initial compose fraction"),
    },
}


class ConfigError(ValueError):
    """Raised for malformed config files or values."""


class AppConfig:
    """Resolved configuration: defaults, overlaid by file, overlaid by flags."""

    def __init__(self, values: dict | None = None):
        self._values = {s: dict(keys) for s, keys in _default_values().items()}
        for section, keys in (values or {}).items():
            for key, value in keys.items():
                self.set(section, key, value)

    def set(self, section: str, key: str, value):
        if section not in DEFAULTS:
            raise ConfigError(f"unknown config section [{section}]")
        if key not in DEFAULTS[section]:
            raise ConfigError(f"unknown config key {key!r} in section [{section}]")
        if value is not None:
            self._values[section][key] = str(value)

    def get(self, section: str, key: str) -> str:
        return self._values[section][key]

    def get_int(self, section: str, key: str) -> int:
        raw = self.get(section, key)
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"[{section}] {key} must be an integer, got {raw!r}") from None

    def get_float(self, section: str, key: str) -> float:
        raw = self.get(section, key)
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"[{section}] {key} must be a number, got {raw!r}") from None

    def get_bool(self, section: str, key: str) -> bool:
        raw = self.get(section, key).strip().lower()
        if raw in ("1", "true", "yes", "on"):
            return True
        if raw in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"[{section}] {key} must be a boolean, got {raw!r}")

    def get_list(self, section: str, key: str) -> list[str]:
        raw = self.get(section, key)
        return [item.strip() for item in raw.split(",") if item.strip()]

    def get_floats(self, section: str, key: str) -> list[float]:
        out = []
        for item in self.get_list(section, key):
            try:
                out.append(float(item))
            except ValueError:
                raise ConfigError(
                    f"[{section}] {key} must be comma-separated numbers, got {item!r}"
                ) from None
        return out

    def get_ints(self, section: str, key: str) -> list[int]:
        out = []
        for item in self.get_list(section, key):
            try:
                out.append(int(item))
            except ValueError:
                raise ConfigError(
                    f"[{section}] {key} must be comma-separated integers, got {item!r}"
                ) from None
        return out

    @property
    def output_dir(self) -> Path:
        env = os.environ.get(OUTPUT_DIR_ENV)
        return Path(env) if env else Path(self.get("run", "output_dir"))

    def sections(self) -> dict:
        return {s: dict(keys) for s, keys in self._values.items()}


def _default_values() -> dict:
    return {s: {k: d for k, (d, _) in keys.items()} for s, keys in DEFAULTS.items()}


def load_config(path) -> AppConfig:
    """Parse and validate a config file; unknown keys are errors."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser()
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise ConfigError(f"could not parse {path}: {exc}") from exc
    cfg = AppConfig()
    for section in parser.sections():
        for key, value in parser.items(section):
            cfg.set(section, key, value)
    return cfg


def config_help() -> str:
    """Human-readable table of every config key and its default."""
    lines = ["configuration keys (config file sections, overridable by flags):"]
    for section, keys in DEFAULTS.items():
        lines.append(f"  [{section}]")
        for key, (default, help_text) in keys.items():
            shown = default if default != "" else "(none)"
            lines.append(f"    {key} = {shown}")
            lines.append(f"        {help_text}")
    return "\n".join(lines)


def write_manifest(path, config: AppConfig, extra: dict | None = None):
    """Persist the fully resolved configuration next to a run's outputs."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = []
    if extra:
        lines.append("[manifest]")
        for key in sorted(extra):
            lines.append(f"{key} = {extra[key]}")
        lines.append("")
    for section, keys in config.sections().items():
        lines.append(f"[{section}]")
        for key in sorted(keys):
            lines.append(f"{key} = {keys[key]}")
        lines.append("")
    path.write_text("\n".join(lines), encoding="utf-8")
    return path
