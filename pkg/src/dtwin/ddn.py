"""Exact filtering and prediction over the digital-state chain.

After conditioning on enacted actions and classifier estimates the decision
network is a chain, so the sum-product pass reduces to the forward recursion
implemented here.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .statespace import BELIEF_ATOL, check_belief, map_state


class DegenerateEvidenceError(ArithmeticError):
    """The evidence assigns zero probability to every state reachable from the prior."""


@dataclass(frozen=True)
class CPTViolation:
    row: int
    reason: str


def validate_cpt(table, atol: float = BELIEF_ATOL) -> CPTViolation | None:
    """Return ``None`` for a valid row-stochastic table, else the first bad row."""
    t = np.asarray(table, dtype=float)
    if t.ndim != 2:
        return CPTViolation(-1, "table is not two-dimensional")
    for i, row in enumerate(t):
        if not np.all(np.isfinite(row)):
            return CPTViolation(i, "non-finite entry")
        if np.any(row < 0) or np.any(row > 1):
            return CPTViolation(i, "entry outside [0, 1]")
        if abs(row.sum() - 1.0) > atol:
            return CPTViolation(i, f"row sums to {row.sum()!r}")
    return None


def _checked_table(table, square: bool = True) -> np.ndarray:
    t = np.array(table, dtype=float)
    if square and (t.ndim != 2 or t.shape[0] != t.shape[1]):
        raise ValueError(f"expected a square table, got shape {t.shape}")
    bad = validate_cpt(t)
    if bad is not None:
        raise ValueError(f"invalid CPT at row {bad.row}: {bad.reason}")
    t.setflags(write=False)
    return t


@dataclass(frozen=True)
class TransitionModel:
    """``table[i, j] = p(D_{t+1} = j | D_t = i, action)``."""

    action: int
    table: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "table", _checked_table(self.table))

    @property
    def n_states(self) -> int:
        return self.table.shape[0]


@dataclass(frozen=True)
class ConfusionCPT:
    """``table[e, d] = p(D_t = d | D_t^NN = e)``: belief over the true state per estimate."""

    table: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "table", _checked_table(self.table))

    @property
    def n_states(self) -> int:
        return self.table.shape[0]


@dataclass
class StepRecord:
    t: int
    action: int
    estimates: list[int]
    posterior: np.ndarray
    reward: float
    map_state: int = field(init=False)

    def __post_init__(self):
        self.map_state = map_state(self.posterior)


def _normalize(v: np.ndarray) -> np.ndarray:
    s = v.sum()
    return v / s


def transition_predict(prior, model: TransitionModel) -> np.ndarray:
    b = check_belief(prior, model.n_states)
    return _normalize(b @ model.table)


def evidence_likelihood(estimates: Sequence[int], cpt: ConfusionCPT) -> np.ndarray:
    """Product over the batch of ``cpt[e, :]``; estimates are independent given ``D_t``."""
    lik = np.ones(cpt.n_states)
    for e in estimates:
        lik = lik * cpt.table[int(e)]
    return lik


def assimilate_step(
    prior,
    last_action: int,
    estimates: Sequence[int],
    model: TransitionModel | Mapping[int, TransitionModel],
    cpt: ConfusionCPT,
) -> np.ndarray:
    """One forward step: predict with the enacted action, then weight by every estimate.

    ``model`` is either the transition model of ``last_action`` or a mapping
    from action id to model.
    """
    if len(estimates) == 0:
        raise ValueError("at least one classifier estimate is required per step")
    if not isinstance(model, TransitionModel):
        model = model[last_action]
    elif model.action != last_action:
        raise ValueError(f"transition model is for action {model.action}, not {last_action}")
    if model.n_states != cpt.n_states:
        raise ValueError("transition model and confusion CPT sizes differ")
    predicted = transition_predict(prior, model)
    # Renormalising after each factor keeps long batches away from underflow.
    post = predicted
    for e in estimates:
        post = post * cpt.table[int(e)]
        s = post.sum()
        if not s > 0:
            raise DegenerateEvidenceError(
                f"estimate {e} has zero probability under the predicted belief"
            )
        post = post / s
    return post


def control_distribution(belief, policy, n_actions: int) -> np.ndarray:
    """Push a belief forward through a deterministic policy."""
    policy = np.asarray(policy, dtype=int)
    return np.bincount(policy, weights=np.asarray(belief, dtype=float), minlength=n_actions)


def predict_closed_loop(
    start,
    policy,
    models: Mapping[int, TransitionModel] | Sequence[TransitionModel],
    horizon: int,
) -> tuple[np.ndarray, np.ndarray]:
    """Unroll the chain under the policy without any data or enacted actions.

    Returns ``(beliefs, controls)`` of shapes ``(horizon + 1, N_d)`` and
    ``(horizon + 1, K)``; row 0 is the start belief and its control distribution.
    """
    if horizon < 0:
        raise ValueError("horizon must be nonnegative")
    if isinstance(models, Mapping):
        models = [models[a] for a in sorted(models)]
    tables = [m.table for m in models]
    n_actions = len(tables)
    policy = np.asarray(policy, dtype=int)
    b = check_belief(start, tables[0].shape[0])
    if policy.shape != b.shape:
        raise ValueError("policy length does not match the state space")
    if policy.min() < 0 or policy.max() >= n_actions:
        raise ValueError("policy refers to an action without a transition model")
    beliefs = [b]
    controls = [control_distribution(b, policy, n_actions)]
    for _ in range(horizon):
        nxt = np.zeros_like(b)
        for u, tab in enumerate(tables):
            mask = policy == u
            if mask.any():
                nxt += b[mask] @ tab[mask]
        b = _normalize(nxt)
        beliefs.append(b)
        controls.append(control_distribution(b, policy, n_actions))
    return np.array(beliefs), np.array(controls)
