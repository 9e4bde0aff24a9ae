"""Discrete digital-state lattice: undamaged state plus (region, damage interval) cells."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

BELIEF_ATOL = 1e-12


class ConfigurationError(ValueError):
    """Raised for structurally invalid model definitions."""


@dataclass(frozen=True)
class StateSpace:
    """Digital states ``0`` (undamaged) and ``(region j, interval k)`` cells.

    Regions and intervals are 1-based; the flat index of ``(j, k)`` is
    ``(j - 1) * n_intervals + k``.
    """

    n_regions: int
    edges: tuple[float, ...]

    @property
    def n_intervals(self) -> int:
        return len(self.edges) - 1

    @property
    def n_states(self) -> int:
        return 1 + self.n_regions * self.n_intervals

    @property
    def delta_min(self) -> float:
        return self.edges[0]

    @property
    def delta_max(self) -> float:
        return self.edges[-1]

    @property
    def interval_bounds(self) -> list[tuple[float, float]]:
        return list(zip(self.edges[:-1], self.edges[1:]))

    def index(self, region: int, interval: int) -> int:
        if region == 0:
            return 0
        if not (1 <= region <= self.n_regions and 1 <= interval <= self.n_intervals):
            raise IndexError(f"cell ({region}, {interval}) outside the lattice")
        return (region - 1) * self.n_intervals + interval

    def cell(self, state: int) -> tuple[int, int]:
        """Inverse of :meth:`index`; state 0 maps to ``(0, 0)``."""
        if not 0 <= state < self.n_states:
            raise IndexError(f"state {state} outside 0..{self.n_states - 1}")
        if state == 0:
            return 0, 0
        j, k = divmod(state - 1, self.n_intervals)
        return j + 1, k + 1

    def interval_of(self, delta: float) -> int:
        """1-based interval containing ``delta`` (closed below, last interval closed above)."""
        if delta < self.edges[0] or delta > self.edges[-1]:
            raise ValueError(
                f"damage level {delta!r} outside [{self.edges[0]}, {self.edges[-1]}]"
            )
        k = int(np.searchsorted(self.edges, delta, side="right"))
        return min(k, self.n_intervals)

    def midpoints(self) -> np.ndarray:
        e = np.asarray(self.edges)
        return 0.5 * (e[:-1] + e[1:])

    def labels(self) -> list[str]:
        out = ["undamaged"]
        for j in range(1, self.n_regions + 1):
            for lo, hi in self.interval_bounds:
                out.append(f"y{j}:[{lo:g},{hi:g}]")
        return out

    def digest(self) -> str:
        """Stable hash identifying the lattice, used to match persisted artifacts."""
        payload = json.dumps(
            {"n_regions": self.n_regions, "edges": [repr(float(e)) for e in self.edges]},
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def build_state_space(n_regions: int, interval_bounds: Sequence) -> StateSpace:
    """Build the lattice from either interval pairs ``[(lo, hi), ...]`` or an edge list.

    >>> build_state_space(7, [0.30, 0.35, 0.45, 0.55, 0.65, 0.75, 0.80]).n_states
    43
    """
    if int(n_regions) != n_regions or n_regions < 1:
        raise ConfigurationError(f"n_regions must be a positive integer, got {n_regions!r}")
    bounds = list(interval_bounds)
    if not bounds:
        raise ConfigurationError("at least one damage interval is required")
    if np.ndim(bounds[0]) == 1:
        pairs = [tuple(map(float, b)) for b in bounds]
        for (lo0, hi0), (lo1, _) in zip(pairs, pairs[1:]):
            if hi0 != lo1:
                raise ConfigurationError(f"intervals not contiguous at {hi0} / {lo1}")
        edges = [pairs[0][0]] + [hi for _, hi in pairs]
    else:
        edges = [float(b) for b in bounds]
        if len(edges) < 2:
            raise ConfigurationError("an edge list needs at least two entries")
    if not all(np.isfinite(edges)):
        raise ConfigurationError("interval bounds must be finite")
    if any(b <= a for a, b in zip(edges, edges[1:])):
        raise ConfigurationError(f"interval bounds must be strictly increasing: {edges}")
    return StateSpace(int(n_regions), tuple(edges))


def point_mass(space: StateSpace | int, state: int) -> np.ndarray:
    n = space if isinstance(space, int) else space.n_states
    b = np.zeros(n)
    b[state] = 1.0
    return b


def check_belief(belief, n_states: int | None = None) -> np.ndarray:
    """Validate a probability vector and return it as a float array."""
    b = np.asarray(belief, dtype=float)
    if b.ndim != 1:
        raise ValueError("belief must be one-dimensional")
    if n_states is not None and b.shape[0] != n_states:
        raise ValueError(f"belief has length {b.shape[0]}, expected {n_states}")
    if np.any(b < 0) or not np.all(np.isfinite(b)):
        raise ValueError("belief entries must be finite and nonnegative")
    if abs(b.sum() - 1.0) > BELIEF_ATOL:
        raise ValueError(f"belief sums to {b.sum()!r}, not 1")
    return b


def map_state(belief) -> int:
    """Argmax of a belief; np.argmax already returns the lowest index on ties."""
    return int(np.argmax(belief))
