"""Implicit Newmark time stepping (average-acceleration member by default)."""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla


class FactorizationError(ArithmeticError):
    pass


def newmark_integrate(
    M,
    C,
    K,
    F,
    dt: float,
    x0=None,
    v0=None,
    beta: float = 0.25,
    gamma: float = 0.5,
    return_all: bool = False,
):
    """Integrate ``M x'' + C x' + K x = f`` on a uniform grid.

    ``F`` holds the load at ``t_0, ..., t_L`` as columns, shape ``(n, L + 1)``.
    Returns displacements at ``t_1, ..., t_L`` as an ``(n, L)`` array, or
    ``(x, v, a)`` including the initial column when ``return_all`` is set.
    """
    if dt <= 0:
        raise ValueError("time step must be positive")
    M, C, K = (np.asarray(A, dtype=float) for A in (M, C, K))
    F = np.asarray(F, dtype=float)
    n, steps = M.shape[0], F.shape[1] - 1
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    v = np.zeros(n) if v0 is None else np.array(v0, dtype=float)

    try:
        a = sla.cho_solve(sla.cho_factor(M), F[:, 0] - C @ v - K @ x)
    except sla.LinAlgError as exc:
        raise FactorizationError("mass matrix is not positive definite") from exc

    c0 = 1.0 / (beta * dt**2)
    c1 = gamma / (beta * dt)
    c2 = 1.0 / (beta * dt)
    c3 = 1.0 / (2 * beta) - 1.0
    c4 = gamma / beta - 1.0
    c5 = dt * (gamma / (2 * beta) - 1.0)
    K_eff = K + c0 * M + c1 * C
    try:
        fac = sla.cho_factor(K_eff)
    except sla.LinAlgError:
        try:
            fac = sla.lu_factor(K_eff, check_finite=True)
        except (sla.LinAlgError, ValueError) as exc:
            raise FactorizationError("effective stiffness could not be factorized") from exc
        solve = lambda r: sla.lu_solve(fac, r)  # noqa: E731
    else:
        solve = lambda r: sla.cho_solve(fac, r)  # noqa: E731

    X = np.empty((n, steps + 1))
    V = np.empty_like(X)
    A = np.empty_like(X)
    X[:, 0], V[:, 0], A[:, 0] = x, v, a
    for l in range(steps):
        rhs = F[:, l + 1] + M @ (c0 * x + c2 * v + c3 * a) + C @ (c1 * x + c4 * v + c5 * a)
        x_new = solve(rhs)
        a_new = c0 * (x_new - x) - c2 * v - c3 * a
        v = v + dt * ((1.0 - gamma) * a + gamma * a_new)
        x, a = x_new, a_new
        X[:, l + 1], V[:, l + 1], A[:, l + 1] = x, v, a
    if not np.all(np.isfinite(X)):
        raise FactorizationError("non-finite response; check the system matrices")
    if return_all:
        return X, V, A
    return X[:, 1:]
