"""Transition tables for the maintenance actions used by the case studies."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .statespace import ConfigurationError, StateSpace


def deterioration_table(space: StateSpace, p_inception: float, p_growth: float | None = None):
    """Lower-triangular degradation: inception into interval 1 of any region, one-interval growth.

    ``p_inception`` is per region, so the undamaged state is kept with
    probability ``1 - n_regions * p_inception``. The last interval is absorbing.
    """
    p_growth = p_inception if p_growth is None else p_growth
    if not 0 <= p_growth <= 1 or p_inception < 0 or space.n_regions * p_inception > 1:
        raise ConfigurationError("deterioration probabilities out of range")
    n, nk = space.n_states, space.n_intervals
    t = np.zeros((n, n))
    t[0, 0] = 1.0 - space.n_regions * p_inception
    for j in range(1, space.n_regions + 1):
        t[0, space.index(j, 1)] = p_inception
        for k in range(1, nk + 1):
            s = space.index(j, k)
            if k < nk:
                t[s, s] = 1.0 - p_growth
                t[s, s + 1] = p_growth
            else:
                t[s, s] = 1.0
    return t


def perfect_repair_table(space: StateSpace):
    """Every state moves to the undamaged state."""
    t = np.zeros((space.n_states, space.n_states))
    t[:, 0] = 1.0
    return t


def imperfect_repair_table(space: StateSpace, shift_probs: Sequence[float]):
    """``shift_probs[m]`` is the probability of improving by ``m`` intervals.

    Improving past the first interval lands in the undamaged state, which is
    itself absorbing under repair.
    """
    probs = np.asarray(shift_probs, dtype=float)
    if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
        raise ConfigurationError(f"repair shift probabilities must sum to 1: {shift_probs}")
    t = np.zeros((space.n_states, space.n_states))
    t[0, 0] = 1.0
    for j in range(1, space.n_regions + 1):
        for k in range(1, space.n_intervals + 1):
            s = space.index(j, k)
            for m, p in enumerate(probs):
                t[s, space.index(j, k - m) if k - m >= 1 else 0] += p
    return t


def build_table(space: StateSpace, spec: dict) -> np.ndarray:
    """Dispatch on a config mapping such as ``{"kind": "deterioration", "p_inception": 0.05}``."""
    kind = spec.get("kind")
    if kind == "deterioration":
        return deterioration_table(space, spec["p_inception"], spec.get("p_growth"))
    if kind == "perfect_repair":
        return perfect_repair_table(space)
    if kind == "imperfect_repair":
        return imperfect_repair_table(space, spec["shift_probs"])
    if kind == "identity":
        return np.eye(space.n_states)
    raise ConfigurationError(f"unknown transition kind {kind!r}")
