"""Iterated public goods game between compose/detour agents.

Each of N agents repeatedly chooses Compose (costly, feeds a shared benefit
pool) or Detour (free). Action choice is a temperature softmax over the
agent's running action-value estimates, which are updated every round as an
exponential moving average of that round's payoffs. Both action values are
refreshed from the realized round (the compose payoff and the detour payoff
are common knowledge given the composer count), which makes the population
dynamics match the mean-field iteration and produces the bistable basins
around the tipping composition c/kappa in contingent-benefit mode.

Three feedback modes mirror the training-time interventions:

  baseline           every agent updates every round.
  classical-dropout  an agent is deactivated with probability 1 - active_prob;
                     a deactivated agent is forced to Detour for the round and
                     receives no value update.
  gradient-dropout   every agent acts normally, but with probability
                     1 - update_prob its value update is suspended for the
                     round (it ignores that round's feedback).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .stochastics import Rng

COMPOSE = "compose"
DETOUR = "detour"

MODES = ("baseline", "classical-dropout", "gradient-dropout")
BENEFIT_MODES = ("shared", "contingent")

__all__ = [
    "GameConfig",
    "Agents",
    "Trace",
    "payoff",
    "softmax_choice",
    "step",
    "run",
    "tipping_point",
    "mean_field_oracle",
]


@dataclass(frozen=True)
class GameConfig:
    num_players: int = 200
    benefit_factor: float = 2.0
    compose_cost: float = 0.5
    exploration_temp: float = 0.1
    mode: str = "baseline"
    active_prob: float = 1.0  # classical-dropout: P(agent stays active)
    update_prob: float = 1.0  # gradient-dropout: P(value update applied)
    benefit_mode: str = "shared"
    q_learning_rate: float = 0.1
    rounds: int = 1000
    initial_compose_fraction: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.num_players < 2:
            raise ValueError("num_players must be >= 2")
        if self.benefit_factor <= 0:
            raise ValueError("benefit_factor must be > 0")
        if self.compose_cost < 0:
            raise ValueError("compose_cost must be >= 0")
        if self.exploration_temp < 0:
            raise ValueError("exploration_temp must be >= 0")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r} (expected one of {', '.join(MODES)})")
        if self.benefit_mode not in BENEFIT_MODES:
            raise ValueError(f"unknown benefit_mode {self.benefit_mode!r}")
        for name in ("active_prob", "update_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        if not 0.0 < self.q_learning_rate <= 1.0:
            raise ValueError("q_learning_rate must be in (0, 1]")
        if self.rounds < 0:
            raise ValueError("rounds must be >= 0")
        if not 0.0 <= self.initial_compose_fraction <= 1.0:
            raise ValueError("initial_compose_fraction must be in [0, 1]")


@dataclass
class Agents:
    """Population state: action-value estimates and current actions."""

    q_compose: np.ndarray
    q_detour: np.ndarray
    compose: np.ndarray  # bool, True where the current action is Compose

    def copy(self) -> "Agents":
        return Agents(self.q_compose.copy(), self.q_detour.copy(), self.compose.copy())


def init_agents(config: GameConfig) -> Agents:
    """All action values start at zero; the first floor(f*N) agents compose."""
    n = config.num_players
    compose = np.zeros(n, dtype=bool)
    compose[: int(config.initial_compose_fraction * n)] = True
    return Agents(np.zeros(n), np.zeros(n), compose)


def payoff(action: str, k: int, config: GameConfig) -> float:
    """Payoff of one agent when k agents (including it) compose.

    shared:     everyone receives benefit_factor * k / N; composers also pay
                the compose cost, so Detour dominates pointwise.
    contingent: only composers receive the benefit (minus cost); detouring
                pays exactly 0, creating the tipping composition c/kappa.
    """
    if action not in (COMPOSE, DETOUR):
        raise ValueError(f"unknown action {action!r}")
    if not 0 <= k <= config.num_players:
        raise ValueError(f"composer count {k} out of range")
    pool = config.benefit_factor * k / config.num_players
    if config.benefit_mode == "shared":
        return pool - (config.compose_cost if action == COMPOSE else 0.0)
    return pool - config.compose_cost if action == COMPOSE else 0.0


def tipping_point(config: GameConfig) -> float:
    """Composition level above which composing beats detouring, in [0, 1]."""
    return float(min(max(config.compose_cost / config.benefit_factor, 0.0), 1.0))


def compose_probability(q_compose, q_detour, temp: float):
    """Softmax probability of choosing Compose; temp 0 is strictly greedy
    with ties split evenly."""
    qc = np.asarray(q_compose, dtype=np.float64)
    qd = np.asarray(q_detour, dtype=np.float64)
    if temp == 0.0:
        p = np.where(qc > qd, 1.0, np.where(qc < qd, 0.0, 0.5))
    else:
        z = np.clip((qc - qd) / temp, -700.0, 700.0)
        p = 1.0 / (1.0 + np.exp(-z))
    return p if p.ndim else float(p)


def softmax_choice(q_compose: float, q_detour: float, temp: float, rng: Rng) -> str:
    """Draw one action from the softmax over the two action values."""
    if temp < 0:
        raise ValueError("temperature must be >= 0")
    p = compose_probability(q_compose, q_detour, temp)
    return COMPOSE if rng.gen.random() < p else DETOUR


def step(agents: Agents, config: GameConfig, rng: Rng) -> tuple[Agents, float]:
    """Play one round; returns the updated population and the composition level.

    The round plays the agents' current actions (after forcing deactivated
    agents to Detour in classical-dropout mode), applies the value updates,
    and then redraws every agent's action for the next round from the
    updated values. Action draws, deactivation draws, and update-suspension
    draws come from separate substreams so that modes which do not use a
    draw kind leave the others untouched.
    """
    out = agents.copy()
    n = config.num_players
    if out.compose.shape[0] != n:
        raise ValueError("agent count does not match the config")

    if config.mode == "classical-dropout":
        active = rng.substream("deactivate").gen.random(n) < config.active_prob
        out.compose &= active
    else:
        active = np.ones(n, dtype=bool)

    k = int(out.compose.sum())
    c_level = k / n

    u_compose = payoff(COMPOSE, k, config)
    u_detour = payoff(DETOUR, k, config)

    updating = active
    if config.mode == "gradient-dropout":
        updating = rng.substream("suspend").gen.random(n) < config.update_prob
    lam = config.q_learning_rate
    out.q_compose[updating] = (1.0 - lam) * out.q_compose[updating] + lam * u_compose
    out.q_detour[updating] = (1.0 - lam) * out.q_detour[updating] + lam * u_detour

    p = compose_probability(out.q_compose, out.q_detour, config.exploration_temp)
    out.compose = rng.substream("actions").gen.random(n) < p
    return out, c_level


@dataclass(frozen=True)
class Trace:
    """Per-round composition level and mean realized payoff."""

    composition: np.ndarray
    mean_payoff: np.ndarray

    def __len__(self) -> int:
        return self.composition.shape[0]


def run(config: GameConfig) -> Trace:
    """Simulate the iterated game for config.rounds rounds."""
    rng = Rng(config.seed)
    agents = init_agents(config)
    comp = np.empty(config.rounds)
    pay = np.empty(config.rounds)
    for t in range(config.rounds):
        agents, c = step(agents, config, rng.substream("round", t))
        k = int(round(c * config.num_players))
        comp[t] = c
        pay[t] = c * payoff(COMPOSE, k, config) + (1.0 - c) * payoff(DETOUR, k, config)
    return Trace(comp, pay)


def mean_field_oracle(config: GameConfig) -> np.ndarray:
    """Deterministic trajectory of the expected composition level.

    Replaces per-agent draws with the population softmax probability and
    per-agent updates with their expectation (gradient-dropout scales the
    effective learning rate by update_prob). Supports baseline and
    gradient-dropout modes only.
    """
    if config.mode == "classical-dropout":
        raise ValueError("the mean-field oracle covers baseline and gradient-dropout modes")
    lam = config.q_learning_rate
    if config.mode == "gradient-dropout":
        lam *= config.update_prob
    qc = 0.0
    qd = 0.0
    c = config.initial_compose_fraction
    out = np.empty(config.rounds)
    for t in range(config.rounds):
        out[t] = c
        pool = config.benefit_factor * c
        if config.benefit_mode == "shared":
            u_c, u_d = pool - config.compose_cost, pool
        else:
            u_c, u_d = pool - config.compose_cost, 0.0
        qc += lam * (u_c - qc)
        qd += lam * (u_d - qd)
        c = compose_probability(qc, qd, config.exploration_temp)
    return out
