"""POD bases and Galerkin-projected reduced models."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fem import FEModel
from .newmark import newmark_integrate
from .signals import Recording, SensorMap


@dataclass(frozen=True)
class ReducedBasis:
    W: np.ndarray  # (N_FE, N_RB), orthonormal columns
    singular_values: np.ndarray
    retained_energy: float

    @property
    def size(self) -> int:
        return self.W.shape[1]


def pod_basis(snapshots, eps: float = 1e-3, max_size: int | None = None) -> ReducedBasis:
    """Smallest basis whose discarded energy fraction is at most ``eps``.

    Energy is measured by squared singular values of the snapshot matrix
    (columns are nodal displacement vectors).
    """
    S = np.asarray(snapshots, dtype=float)
    if S.size == 0:
        raise ValueError("empty snapshot matrix")
    U, sigma, _ = np.linalg.svd(S, full_matrices=False)
    energy = sigma**2
    total = energy.sum()
    if not total > 0:
        raise ValueError("snapshot matrix is identically zero")
    # tail[r] = discarded fraction when the first r modes are kept
    tail = np.concatenate([np.cumsum(energy[::-1])[::-1], [0.0]]) / total
    rank = int(np.sum(sigma > sigma[0] * max(S.shape) * np.finfo(float).eps))
    r = int(np.argmax(tail <= eps))
    r = max(1, min(r, rank))
    if max_size is not None:
        r = min(r, max_size)
    # sign convention: largest-magnitude entry of each mode is positive
    W = U[:, :r].copy()
    flip = np.sign(W[np.argmax(np.abs(W), axis=0), np.arange(r)])
    W *= np.where(flip == 0, 1.0, flip)
    return ReducedBasis(W, sigma, float(1.0 - tail[r]))


@dataclass(frozen=True)
class ReducedModel:
    """Affine reduced operators: ``K_r(mu) = K0_r - delta * region_K_r[y - 1]``."""

    M: np.ndarray
    K0: np.ndarray
    region_K: list[np.ndarray]
    rayleigh: tuple[float, float]
    W: np.ndarray

    def stiffness(self, region: int = 0, delta: float = 0.0) -> np.ndarray:
        if region == 0 or delta == 0.0:
            return self.K0
        return self.K0 - delta * self.region_K[region - 1]

    def damping(self, region: int = 0, delta: float = 0.0) -> np.ndarray:
        a0, a1 = self.rayleigh
        return a0 * self.M + a1 * self.stiffness(region, delta)

    def project(self, vectors) -> np.ndarray:
        return self.W.T @ np.asarray(vectors)


def galerkin_reduce(model: FEModel, basis: ReducedBasis | np.ndarray) -> ReducedModel:
    W = basis.W if isinstance(basis, ReducedBasis) else np.asarray(basis)
    if W.shape[0] != model.ndofs:
        raise ValueError(f"basis has {W.shape[0]} rows, model has {model.ndofs} dofs")

    def proj(A):
        R = W.T @ A @ W
        return 0.5 * (R + R.T)

    return ReducedModel(
        proj(model.M), proj(model.K0), [proj(Kj) for Kj in model.region_K], model.rayleigh, W
    )


def rom_solve_and_extract(
    rom: ReducedModel,
    sensors: SensorMap,
    F,
    dt: float,
    region: int = 0,
    delta: float = 0.0,
    fs: float | None = None,
    x0=None,
    v0=None,
) -> Recording:
    """Integrate the reduced system, lift with ``W`` and keep the sensor dofs.

    ``F`` is the full-order load history ``(N_FE, L + 1)``.
    """
    Fr = rom.project(F)
    xr0 = None if x0 is None else rom.project(x0)
    vr0 = None if v0 is None else rom.project(v0)
    Xr = newmark_integrate(
        rom.M, rom.damping(region, delta), rom.stiffness(region, delta), Fr, dt, xr0, vr0
    )
    # lifting only the sensor rows of W is enough
    samples = (rom.W[sensors.dofs] @ Xr).T
    fs = 1.0 / dt if fs is None else fs
    return Recording(samples, fs, samples.shape[0] / fs)
