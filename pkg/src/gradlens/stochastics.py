"""Seeded randomness, noise samplers, and target-noising strategies.

All stochastic components draw from an :class:`Rng`, a thin wrapper around
numpy's PCG64 generator that derives independent substreams from a root seed
and a sequence of labels. Substreams are derived from the labels alone (never
from draw state), so enabling one stochastic component cannot perturb the
draws of another under the same root seed.
"""

from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Rng",
    "StableParams",
    "TargetNoiseSpec",
    "sample_uniform",
    "sample_gaussian",
    "sample_stable",
    "noise_inputs",
    "noise_targets",
    "noise_class_targets",
]

_U64 = (1 << 64) - 1


def _label_key(label) -> int:
    """Map a substream label to a stable 64-bit integer."""
    if isinstance(label, (int, np.integer)):
        data = b"i" + int(label).to_bytes(16, "little", signed=True)
    elif isinstance(label, str):
        data = b"s" + label.encode("utf-8")
    else:
        raise TypeError(f"substream labels must be str or int, got {type(label).__name__}")
    return int.from_bytes(hashlib.blake2s(data, digest_size=8).digest(), "little")


class Rng:
    """Deterministic random stream addressed by (seed, label path).

    Two instances with the same seed and the same sequence of substream
    labels produce identical draws, on any platform, in any order of
    construction.
    """

    def __init__(self, seed: int, _path: tuple = ()):
        self.seed = int(seed) & _U64
        self._path = tuple(_path)
        self._gen: np.random.Generator | None = None

    @property
    def gen(self) -> np.random.Generator:
        if self._gen is None:
            entropy = [self.seed] + [_label_key(p) for p in self._path]
            self._gen = np.random.default_rng(np.random.SeedSequence(entropy))
        return self._gen

    def substream(self, *labels) -> "Rng":
        """Derive an independent stream; does not consume draws from self."""
        return Rng(self.seed, self._path + tuple(labels))

    def __repr__(self) -> str:
        path = ",".join(map(str, self._path))
        return f"Rng(seed={self.seed}, path=[{path}])"


@dataclass(frozen=True)
class StableParams:
    """Shape parameters of the heavy-tail stable family."""

    alpha: float
    beta: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.alpha <= 2.0:
            raise ValueError(f"alpha must be in (0, 2], got {self.alpha}")
        if not -1.0 <= self.beta <= 1.0:
            raise ValueError(f"beta must be in [-1, 1], got {self.beta}")


def sample_uniform(rng: Rng, lo: float, hi: float, size=None):
    """Uniform draw(s) on [lo, hi)."""
    if lo > hi:
        raise ValueError(f"uniform bounds reversed: lo={lo} > hi={hi}")
    out = rng.gen.uniform(lo, hi, size)
    return float(out) if size is None else out


def sample_gaussian(rng: Rng, size=None):
    """Standard normal draw(s)."""
    out = rng.gen.standard_normal(size)
    return float(out) if size is None else out


def sample_stable(rng: Rng, params: StableParams, size=None):
    """Draw from the standard stable law S(alpha, beta; scale 1, location 0).

    Uses the Chambers-Mallows-Stuck construction in the 1-parametrization:
    a uniform angle V on (-pi/2, pi/2) and a unit exponential W are combined
    through a closed-form transform. alpha = 2 reduces to Normal(0, 2) and
    alpha = 1, beta = 0 to the standard Cauchy. The alpha = 1 case uses its
    own branch of the transform.
    """
    alpha, beta = params.alpha, params.beta
    shape = size if size is not None else ()
    v = rng.gen.uniform(-math.pi / 2, math.pi / 2, shape)
    w = rng.gen.standard_exponential(shape)
    if alpha == 1.0:
        half_pi = math.pi / 2
        bv = half_pi + beta * v
        x = (bv * np.tan(v) - beta * np.log(half_pi * w * np.cos(v) / bv)) / half_pi
    else:
        ta = math.tan(math.pi * alpha / 2)
        b0 = math.atan(beta * ta) / alpha
        s0 = (1.0 + (beta * ta) ** 2) ** (1.0 / (2.0 * alpha))
        av = alpha * (v + b0)
        x = (
            s0
            * np.sin(av)
            / np.cos(v) ** (1.0 / alpha)
            * (np.cos(v - av) / w) ** ((1.0 - alpha) / alpha)
        )
    return float(x) if size is None else x


def noise_inputs(features: np.ndarray, amplitude: float, rng: Rng) -> np.ndarray:
    """Add independent Uniform[-amplitude, +amplitude] noise to every entry."""
    if amplitude < 0:
        raise ValueError(f"noise amplitude must be >= 0, got {amplitude}")
    features = np.asarray(features, dtype=np.float64)
    if amplitude == 0.0:
        return features.copy()
    return features + rng.gen.uniform(-amplitude, amplitude, features.shape)


_TDS_RE = re.compile(r"^TDS(\d+(?:\.\d+)?)$")
_STABLE_RE = re.compile(
    r"^StableA(?P<alpha>-?\d+(?:\.\d+)?)B(?P<beta>-?\d+(?:\.\d+)?)(?:F(?P<factor>\d+(?:\.\d+)?))?$"
)


def _fmt(x: float) -> str:
    return f"{x:g}"


@dataclass(frozen=True)
class TargetNoiseSpec:
    """One of the three target-noising strategies.

    kind "none":   targets pass through unchanged.
    kind "white":  y + x * sigma_y * N(0, 1) per element.
    kind "stable": y + factor * sigma_y * S(alpha, beta) per element.
    """

    kind: str = "none"
    x: float = 0.0
    stable: StableParams | None = None
    factor: float = 0.03

    def __post_init__(self):
        if self.kind not in ("none", "white", "stable"):
            raise ValueError(f"unknown target-noise kind {self.kind!r}")
        if self.kind == "white" and self.x < 0:
            raise ValueError("white-noise multiplier must be >= 0")
        if self.kind == "stable":
            if self.stable is None:
                raise ValueError("stable target noise requires StableParams")
            if self.factor < 0:
                raise ValueError("stable amplitude factor must be >= 0")

    @classmethod
    def none(cls) -> "TargetNoiseSpec":
        return cls(kind="none")

    @classmethod
    def white(cls, x: float) -> "TargetNoiseSpec":
        return cls(kind="white", x=x)

    @classmethod
    def stable_noise(cls, alpha: float, beta: float, factor: float = 0.03) -> "TargetNoiseSpec":
        return cls(kind="stable", stable=StableParams(alpha, beta), factor=factor)

    @classmethod
    def parse(cls, name: str) -> "TargetNoiseSpec":
        """Parse a strategy name: NoNoise, TDS<X>, or StableA<a>B<b>F<f>."""
        name = name.strip()
        if name == "NoNoise":
            return cls.none()
        m = _TDS_RE.match(name)
        if m:
            return cls.white(float(m.group(1)))
        m = _STABLE_RE.match(name)
        if m:
            factor = float(m.group("factor")) if m.group("factor") else 0.03
            return cls.stable_noise(float(m.group("alpha")), float(m.group("beta")), factor)
        raise ValueError(
            f"unrecognized target-noise name {name!r}; expected NoNoise, "
            "TDS<X>, or StableA<alpha>B<beta>F<factor>"
        )

    @property
    def name(self) -> str:
        if self.kind == "none":
            return "NoNoise"
        if self.kind == "white":
            return f"TDS{_fmt(self.x)}"
        return f"StableA{_fmt(self.stable.alpha)}B{_fmt(self.stable.beta)}F{_fmt(self.factor)}"

    def __str__(self) -> str:
        return self.name


def noise_targets(
    targets: np.ndarray, spec: TargetNoiseSpec, sigma_y: float, rng: Rng
) -> np.ndarray:
    """Perturb regression targets according to the noising strategy."""
    if sigma_y < 0:
        raise ValueError("sigma_y must be >= 0")
    targets = np.asarray(targets, dtype=np.float64)
    if spec.kind == "none":
        return targets.copy()
    if spec.kind == "white":
        if spec.x == 0.0:
            return targets.copy()
        return targets + spec.x * sigma_y * rng.gen.standard_normal(targets.shape)
    draws = sample_stable(rng, spec.stable, size=targets.shape)
    return targets + spec.factor * sigma_y * draws


def noise_class_targets(
    targets: np.ndarray,
    spec: TargetNoiseSpec,
    sigma_y: float,
    num_classes: int,
    rng: Rng,
) -> np.ndarray:
    """Noise integer class targets through their numeric indices.

    The noisy value is rounded to the nearest integer and clamped to
    [0, num_classes - 1] so the classification loss stays well defined.
    """
    noisy = noise_targets(np.asarray(targets, dtype=np.float64), spec, sigma_y, rng)
    idx = np.rint(noisy)
    np.clip(idx, 0, num_classes - 1, out=idx)
    return idx.astype(np.int64)
