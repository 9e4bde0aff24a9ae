"""Reward tables, value iteration and the control-belief push-forward."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .ddn import TransitionModel, control_distribution
from .statespace import ConfigurationError, StateSpace


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class HealthRule:
    """``offset + coeff * exp(rate * delta)`` for damage in any of ``regions``."""

    regions: tuple[int, ...]
    rate: float
    coeff: float = -1.0
    offset: float = 0.0

    def __call__(self, delta: float) -> float:
        return self.offset + self.coeff * float(np.exp(self.rate * delta))


@dataclass(frozen=True)
class Catastrophic:
    """Health override for states at or beyond ``threshold``.

    With ``rule="overlap"`` an interval is penalised when any damage level it
    contains reaches the threshold; with ``rule="representative"`` only when
    its representative level does.
    """

    threshold: float
    value: float
    rule: str = "overlap"


@dataclass(frozen=True)
class RewardSpec:
    control_rewards: Mapping[int, float]
    health_rules: Sequence[HealthRule]
    alpha: float
    undamaged_health: float = 0.0
    catastrophic: Catastrophic | None = None
    representative: str = "midpoint"

    def __post_init__(self):
        if not np.isfinite(self.alpha):
            raise ConfigurationError("alpha must be finite")
        if self.representative not in ("midpoint", "lower", "upper"):
            raise ConfigurationError(f"unknown representative rule {self.representative!r}")


def representative_deltas(space: StateSpace, rule: str = "midpoint") -> np.ndarray:
    e = np.asarray(space.edges)
    if rule == "midpoint":
        return 0.5 * (e[:-1] + e[1:])
    if rule == "lower":
        return e[:-1].copy()
    if rule == "upper":
        return e[1:].copy()
    raise ConfigurationError(f"unknown representative rule {rule!r}")


def health_vector(space: StateSpace, spec: RewardSpec) -> np.ndarray:
    reps = representative_deltas(space, spec.representative)
    h = np.empty(space.n_states)
    h[0] = spec.undamaged_health
    for s in range(1, space.n_states):
        j, k = space.cell(s)
        rule = next((r for r in spec.health_rules if j in r.regions), None)
        if rule is None:
            raise ConfigurationError(f"no health rule covers region {j}")
        delta = reps[k - 1]
        cat = spec.catastrophic
        if cat is not None:
            if cat.rule == "overlap":
                lo, hi = space.interval_bounds[k - 1]
                last = k == space.n_intervals
                hit = hi > cat.threshold or (last and hi >= cat.threshold)
            elif cat.rule == "representative":
                hit = delta >= cat.threshold
            else:
                raise ConfigurationError(f"unknown catastrophic rule {cat.rule!r}")
            if hit:
                h[s] = cat.value
                continue
        h[s] = rule(delta)
    return h


def build_reward_table(space: StateSpace, spec: RewardSpec, n_actions: int | None = None):
    """``R[s, u] = control[u] + alpha * health(s)``."""
    n_actions = len(spec.control_rewards) if n_actions is None else n_actions
    missing = [u for u in range(n_actions) if u not in spec.control_rewards]
    if missing:
        raise ConfigurationError(f"no control reward for actions {missing}")
    control = np.array([spec.control_rewards[u] for u in range(n_actions)], dtype=float)
    return control[None, :] + spec.alpha * health_vector(space, spec)[:, None]


def _stack_tables(models) -> np.ndarray:
    if isinstance(models, Mapping):
        models = [models[a] for a in sorted(models)]
    return np.stack([m.table if isinstance(m, TransitionModel) else np.asarray(m) for m in models])


def q_values(rewards, models, values, gamma: float) -> np.ndarray:
    tables = _stack_tables(models)
    return np.asarray(rewards) + gamma * np.einsum("uij,j->iu", tables, values)


def greedy_policy(rewards, models, values, gamma: float) -> np.ndarray:
    # argmax picks the first maximum, i.e. the lowest action id on ties
    return np.argmax(q_values(rewards, models, values, gamma), axis=1)


def value_iteration(
    rewards,
    models,
    gamma: float,
    tol: float = 1e-9,
    max_sweeps: int = 100_000,
    residuals: list | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Solve the discounted Bellman optimality equation from ``V = 0``.

    Stops once the sup-norm change of a sweep is at most ``tol``. Pass a list
    as ``residuals`` to collect that change for every sweep.
    """
    if not 0 <= gamma < 1:
        raise ValueError("gamma must lie in [0, 1)")
    if tol <= 0:
        raise ValueError("tol must be positive")
    R = np.asarray(rewards, dtype=float)
    tables = _stack_tables(models)
    if tables.shape[0] != R.shape[1] or tables.shape[1] != R.shape[0]:
        raise ValueError("reward table and transition models disagree in shape")
    V = np.zeros(R.shape[0])
    for _ in range(max_sweeps):
        V_new = (R + gamma * np.einsum("uij,j->iu", tables, V)).max(axis=1)
        res = float(np.max(np.abs(V_new - V)))
        if residuals is not None:
            residuals.append(res)
        V = V_new
        if res <= tol:
            return V, greedy_policy(R, tables, V, gamma)
    raise ConvergenceError(f"value iteration did not reach tol={tol} in {max_sweeps} sweeps")


def control_belief(belief, policy, n_actions: int | None = None) -> np.ndarray:
    policy = np.asarray(policy, dtype=int)
    n_actions = int(policy.max()) + 1 if n_actions is None else n_actions
    return control_distribution(belief, policy, n_actions)


def select_action(control) -> int:
    return int(np.argmax(control))
