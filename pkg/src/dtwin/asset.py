"""Ground-truth evolution of the simulated asset under degradation and repair."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .statespace import StateSpace


@dataclass(frozen=True)
class GroundTruth:
    region: int = 0
    delta: float = 0.0

    def __post_init__(self):
        if self.region == 0 and self.delta != 0.0:
            raise ValueError("an undamaged asset carries no damage level")
        if self.delta < 0:
            raise ValueError("damage level must be nonnegative")


UNDAMAGED = GroundTruth()


@dataclass(frozen=True)
class DegradationSpec:
    """Damage inception while undamaged, truncated-Gaussian growth afterwards (fractions)."""

    inception_prob: float
    inception_range: tuple[float, float] = (0.30, 0.35)
    growth_mean: float = 0.015
    growth_std: float = 0.01

    def __post_init__(self):
        if not 0 <= self.inception_prob <= 1:
            raise ValueError("inception probability must lie in [0, 1]")
        if self.growth_std < 0:
            raise ValueError("growth std must be nonnegative")
        lo, hi = self.inception_range
        if hi < lo:
            raise ValueError("inception range is reversed")


@dataclass(frozen=True)
class RepairSpec:
    """Gaussian damage decrement, or a full reset when ``full_reset`` is set."""

    decrement_mean: float = 0.0
    decrement_std: float = 0.0
    full_reset: bool = False
    recovery_threshold: float = 0.30

    def __post_init__(self):
        if self.decrement_std < 0:
            raise ValueError("decrement std must be nonnegative")


def step_ground_truth(
    gt: GroundTruth,
    process: DegradationSpec | RepairSpec,
    rng: np.random.Generator,
    n_regions: int,
    delta_max: float = 0.80,
) -> GroundTruth:
    """Advance the hidden condition by one step under the process of the enacted action."""
    if isinstance(process, RepairSpec):
        if process.full_reset or gt.region == 0:
            return UNDAMAGED
        dec = min(0.0, rng.normal(process.decrement_mean, process.decrement_std))
        delta = gt.delta + dec
        if delta < process.recovery_threshold:
            return UNDAMAGED
        return GroundTruth(gt.region, delta)

    if gt.region == 0:
        if rng.random() < process.inception_prob:
            region = int(rng.integers(1, n_regions + 1))
            lo, hi = process.inception_range
            return GroundTruth(region, float(min(rng.uniform(lo, hi), delta_max)))
        return UNDAMAGED
    growth = max(0.0, rng.normal(process.growth_mean, process.growth_std))
    return GroundTruth(gt.region, min(gt.delta + growth, delta_max))


def discretize(gt: GroundTruth, space: StateSpace) -> int:
    if gt.region == 0:
        return 0
    return space.index(gt.region, space.interval_of(gt.delta))


def simulate_trajectory(
    actions: Sequence[int],
    processes: Mapping[int, DegradationSpec | RepairSpec],
    rng: np.random.Generator,
    n_regions: int,
    start: GroundTruth = UNDAMAGED,
    delta_max: float = 0.80,
) -> list[GroundTruth]:
    """Open-loop trajectory for a fixed action sequence (``len(actions) + 1`` states)."""
    out = [start]
    for a in actions:
        out.append(step_ground_truth(out[-1], processes[a], rng, n_regions, delta_max))
    return out


def sample_operational_params(ranges: Sequence[tuple[float, float]], rng: np.random.Generator):
    """Independent uniform draws, one per ``(lo, hi)`` range."""
    r = np.asarray(ranges, dtype=float).reshape(-1, 2)
    return r[:, 0] + (r[:, 1] - r[:, 0]) * rng.random(r.shape[0])
