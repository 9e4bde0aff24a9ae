"""Sensor extraction, recordings, measurement noise and Latin hypercube sampling."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import qmc


@dataclass(frozen=True)
class SensorMap:
    """Boolean selection table, one row per sensor channel."""

    table: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.table)
        if t.ndim != 2 or not np.all((t == 0) | (t == 1)) or not np.all(t.sum(axis=1) == 1):
            raise ValueError("each sensor row must select exactly one dof")

    @classmethod
    def from_dofs(cls, dofs: Sequence[int], ndofs: int) -> "SensorMap":
        t = np.zeros((len(dofs), ndofs), dtype=np.int8)
        t[np.arange(len(dofs)), list(dofs)] = 1
        return cls(t)

    @property
    def dofs(self) -> np.ndarray:
        return np.argmax(self.table, axis=1)

    def extract(self, X) -> np.ndarray:
        """``(T X)^T`` for a displacement history ``X`` of shape ``(ndofs, L)``."""
        return np.asarray(X)[self.dofs].T


@dataclass(frozen=True)
class Recording:
    samples: np.ndarray  # (L, N_u)
    fs: float
    duration: float

    @property
    def n_channels(self) -> int:
        return self.samples.shape[1]


def n_samples(duration: float, fs: float) -> int:
    # rounding guard so that 1.5 s at 400 Hz gives 600, not 599
    return int(np.floor(duration * fs + 1e-9))


def time_grid(duration: float, fs: float) -> np.ndarray:
    """``t_0 = 0`` followed by the ``L`` acquisition instants."""
    return np.arange(n_samples(duration, fs) + 1) / fs


def add_noise(rec: Recording, snr: float, rng: np.random.Generator) -> Recording:
    """Per-channel white Gaussian noise with variance ``mean(signal**2) / snr``.

    Silent channels stay silent. ``snr = inf`` returns the samples unchanged.
    """
    if not snr > 0:
        raise ValueError("snr must be positive")
    x = rec.samples
    power = np.mean(x**2, axis=0)
    sigma = np.sqrt(power / snr)
    noisy = x + rng.standard_normal(x.shape) * sigma[None, :]
    return Recording(noisy, rec.fs, rec.duration)


def latin_hypercube(ranges: Sequence[tuple[float, float]], n: int, rng: np.random.Generator):
    """``n`` samples with exactly one point per equiprobable stratum in every margin."""
    if n < 1:
        raise ValueError("n must be at least 1")
    r = np.asarray(ranges, dtype=float).reshape(-1, 2)
    unit = qmc.LatinHypercube(d=r.shape[0], seed=rng).random(n)
    return r[:, 0] + unit * (r[:, 1] - r[:, 0])
