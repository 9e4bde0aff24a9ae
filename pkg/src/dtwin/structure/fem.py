"""Plane Euler-Bernoulli frames with region-wise stiffness reduction.

Every node carries three dofs ``(u, v, theta)``; constrained dofs are
eliminated, so all matrices returned here live on the free dofs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from ..statespace import ConfigurationError

DOFS_PER_NODE = 3
GRAVITY = 9.81


@dataclass(frozen=True)
class Material:
    youngs_modulus: float  # Pa
    density: float  # kg/m^3


@dataclass(frozen=True)
class Section:
    area: float  # m^2
    inertia: float  # m^4
    extra_mass: float = 0.0  # kg/m, non-structural (e.g. ballast)


@dataclass
class FrameGeometry:
    nodes: np.ndarray  # (n_nodes, 2) coordinates in m
    elements: np.ndarray  # (n_elem, 2) node ids
    sections: list[Section]  # one per element
    regions: list[list[int]]  # element ids of damage region j at position j - 1
    fixed_dofs: list[int]
    springs: list[tuple[int, float]] = field(default_factory=list)  # (global dof, N/m)
    name: str = "frame"

    @property
    def n_regions(self) -> int:
        return len(self.regions)

    def dof(self, node: int, component: int) -> int:
        return DOFS_PER_NODE * node + component


def _local_matrices(E, rho, sec: Section, L):
    EA, EI = E * sec.area, E * sec.inertia
    k = np.zeros((6, 6))
    k[np.ix_([0, 3], [0, 3])] = EA / L * np.array([[1, -1], [-1, 1]])
    b = [1, 2, 4, 5]
    k[np.ix_(b, b)] = EI / L**3 * np.array(
        [
            [12, 6 * L, -12, 6 * L],
            [6 * L, 4 * L**2, -6 * L, 2 * L**2],
            [-12, -6 * L, 12, -6 * L],
            [6 * L, 2 * L**2, -6 * L, 4 * L**2],
        ]
    )
    mL = (rho * sec.area + sec.extra_mass) * L
    m = np.zeros((6, 6))
    m[np.ix_([0, 3], [0, 3])] = mL / 6 * np.array([[2, 1], [1, 2]])
    m[np.ix_(b, b)] = mL / 420 * np.array(
        [
            [156, 22 * L, 54, -13 * L],
            [22 * L, 4 * L**2, 13 * L, -3 * L**2],
            [54, 13 * L, 156, -22 * L],
            [-13 * L, -3 * L**2, -22 * L, 4 * L**2],
        ]
    )
    return k, m


def _rotation(c, s):
    r = np.array([[c, s, 0], [-s, c, 0], [0, 0, 1]])
    return sla.block_diag(r, r)


def rayleigh_coefficients(omega1: float, omega2: float, zeta1: float, zeta2: float | None = None):
    """``(a0, a1)`` such that ``C = a0 M + a1 K`` gives the target ratios at two modes."""
    zeta2 = zeta1 if zeta2 is None else zeta2
    a = np.array([[1 / (2 * omega1), omega1 / 2], [1 / (2 * omega2), omega2 / 2]])
    return tuple(np.linalg.solve(a, [zeta1, zeta2]))


@dataclass
class FEModel:
    M: np.ndarray
    K0: np.ndarray
    region_K: list[np.ndarray]  # undamaged stiffness contribution of each region
    free_dofs: np.ndarray  # global dof id of every free dof
    rayleigh: tuple[float, float]
    geometry: FrameGeometry

    @property
    def ndofs(self) -> int:
        return self.M.shape[0]

    @property
    def n_regions(self) -> int:
        return len(self.region_K)

    def free_index(self, node: int, component: int) -> int:
        g = self.geometry.dof(node, component)
        hits = np.flatnonzero(self.free_dofs == g)
        if hits.size == 0:
            raise ConfigurationError(f"dof ({node}, {component}) is constrained")
        return int(hits[0])

    def _check(self, region: int, delta: float):
        if not 0 <= region <= self.n_regions:
            raise ConfigurationError(f"region {region} outside 0..{self.n_regions}")
        if not 0 <= delta < 1:
            raise ConfigurationError(f"damage level {delta} outside [0, 1)")

    def stiffness(self, region: int = 0, delta: float = 0.0) -> np.ndarray:
        """Undamaged stiffness with region ``region`` scaled by ``1 - delta``."""
        self._check(region, delta)
        if region == 0 or delta == 0.0:
            return self.K0.copy()
        return self.K0 - delta * self.region_K[region - 1]

    def damping(self, region: int = 0, delta: float = 0.0) -> np.ndarray:
        a0, a1 = self.rayleigh
        return a0 * self.M + a1 * self.stiffness(region, delta)

    def natural_frequencies(self, region: int = 0, delta: float = 0.0, n: int | None = None):
        """Natural frequencies in Hz, ascending."""
        w2 = sla.eigh(self.stiffness(region, delta), self.M, eigvals_only=True)
        f = np.sqrt(np.clip(w2, 0, None)) / (2 * np.pi)
        return f if n is None else f[:n]


def assemble_model(geometry: FrameGeometry, material: Material, damping_ratio: float = 0.05):
    """Assemble mass and region-split stiffness; damping is fit on the undamaged first two modes."""
    nodes = np.asarray(geometry.nodes, dtype=float)
    elements = np.asarray(geometry.elements, dtype=int)
    if len(geometry.sections) != len(elements):
        raise ConfigurationError("one section per element is required")
    seen: set[int] = set()
    for members in geometry.regions:
        overlap = seen.intersection(members)
        if overlap:
            raise ConfigurationError(f"elements {sorted(overlap)} belong to several regions")
        seen.update(members)
    region_of = {e: j for j, members in enumerate(geometry.regions) for e in members}

    n = DOFS_PER_NODE * len(nodes)
    M = np.zeros((n, n))
    K_rest = np.zeros((n, n))
    K_reg = [np.zeros((n, n)) for _ in geometry.regions]
    for e, (a, b) in enumerate(elements):
        dx, dy = nodes[b] - nodes[a]
        L = float(np.hypot(dx, dy))
        if L <= 0:
            raise ConfigurationError(f"element {e} has zero length")
        k, m = _local_matrices(material.youngs_modulus, material.density, geometry.sections[e], L)
        T = _rotation(dx / L, dy / L)
        idx = np.r_[DOFS_PER_NODE * a : DOFS_PER_NODE * a + 3, DOFS_PER_NODE * b : DOFS_PER_NODE * b + 3]
        target = K_reg[region_of[e]] if e in region_of else K_rest
        target[np.ix_(idx, idx)] += T.T @ k @ T
        M[np.ix_(idx, idx)] += T.T @ m @ T
    for dof, kspring in geometry.springs:
        K_rest[dof, dof] += kspring

    free = np.setdiff1d(np.arange(n), np.asarray(geometry.fixed_dofs, dtype=int))
    sub = np.ix_(free, free)
    M = M[sub]
    K_reg = [0.5 * (Kj[sub] + Kj[sub].T) for Kj in K_reg]
    K0 = 0.5 * (K_rest[sub] + K_rest[sub].T) + sum(K_reg)
    M = 0.5 * (M + M.T)
    try:
        sla.cholesky(M)
    except sla.LinAlgError as exc:
        raise ConfigurationError("mass matrix is not positive definite") from exc

    w2 = sla.eigh(K0, M, eigvals_only=True, subset_by_index=[0, 1])
    omegas = np.sqrt(w2)
    model = FEModel(M, K0, K_reg, free, rayleigh_coefficients(*omegas, damping_ratio), geometry)
    return model


def _segment(p0, p1, n_el):
    t = np.linspace(0.0, 1.0, n_el + 1)[:, None]
    return np.asarray(p0, float) + t * (np.asarray(p1, float) - np.asarray(p0, float))


def l_frame(
    arm_length: float = 4.0,
    elements_per_arm: int = 20,
    width: float = 0.3,
    height: float = 0.4,
    column_regions: int = 4,
    arm_regions: int = 3,
) -> FrameGeometry:
    """L-shaped cantilever: a clamped column and a horizontal arm meeting at a rigid corner.

    Damage regions split the column (clamped side) into ``column_regions``
    groups and the arm into ``arm_regions`` groups, numbered from the clamp.
    """
    col = _segment((0.0, 0.0), (0.0, arm_length), elements_per_arm)
    arm = _segment((0.0, arm_length), (arm_length, arm_length), elements_per_arm)[1:]
    nodes = np.vstack([col, arm])
    ne = 2 * elements_per_arm
    elements = np.column_stack([np.arange(ne), np.arange(1, ne + 1)])
    sec = Section(width * height, width * height**3 / 12)
    regions = [list(g) for g in np.array_split(np.arange(elements_per_arm), column_regions)]
    regions += [list(g + elements_per_arm) for g in np.array_split(np.arange(elements_per_arm), arm_regions)]
    return FrameGeometry(
        nodes=nodes,
        elements=elements,
        sections=[sec] * ne,
        regions=[[int(e) for e in r] for r in regions],
        fixed_dofs=[0, 1, 2],
        name="l_frame",
    )


def portal_frame(
    span: float = 15.7,
    height: float = 4.7,
    deck_elements: int = 32,
    wall_elements: int = 10,
    width: float = 5.9,
    deck_thickness: float = 0.5,
    wall_thickness: float = 0.7,
    ballast_mass: float = 1800.0 * 0.6 * 4.3,
    base_spring: float = 1e9,
    deck_regions: int = 4,
) -> FrameGeometry:
    """Integral portal frame on spring-supported footings.

    Nodes run up the left wall, across the deck and down the right wall.
    Regions: ``deck_regions`` equal deck segments, then the left and right walls.
    Each base has translational springs of stiffness ``base_spring`` and is
    otherwise free to rotate in place of a soil-structure model.
    """
    left = _segment((0.0, 0.0), (0.0, height), wall_elements)
    deck = _segment((0.0, height), (span, height), deck_elements)[1:]
    right = _segment((span, height), (span, 0.0), wall_elements)[1:]
    nodes = np.vstack([left, deck, right])
    ne = len(nodes) - 1
    elements = np.column_stack([np.arange(ne), np.arange(1, ne + 1)])
    wall = Section(width * wall_thickness, width * wall_thickness**3 / 12)
    slab = Section(width * deck_thickness, width * deck_thickness**3 / 12, extra_mass=ballast_mass)
    sections = [wall] * wall_elements + [slab] * deck_elements + [wall] * wall_elements
    deck_ids = np.arange(wall_elements, wall_elements + deck_elements)
    regions = [list(map(int, g)) for g in np.array_split(deck_ids, deck_regions)]
    regions.append(list(range(wall_elements)))
    regions.append(list(range(wall_elements + deck_elements, ne)))
    last = len(nodes) - 1
    springs = [(DOFS_PER_NODE * nd + c, base_spring) for nd in (0, last) for c in (0, 1)]
    return FrameGeometry(
        nodes=nodes,
        elements=elements,
        sections=sections,
        regions=regions,
        fixed_dofs=[],
        springs=springs,
        name="portal_frame",
    )


@dataclass(frozen=True)
class HarmonicLoad:
    """Pressure ``Q sin(2 pi f t)`` (Q in kPa) over ``area`` acting on one dof."""

    node: int
    component: int = 1
    area: float = 0.09
    sign: float = -1.0

    def history(self, model: FEModel, params, times) -> np.ndarray:
        q_kpa, freq = params
        F = np.zeros((model.ndofs, len(times)))
        F[model.free_index(self.node, self.component)] = (
            self.sign * q_kpa * 1e3 * self.area * np.sin(2 * np.pi * freq * np.asarray(times))
        )
        return F


@dataclass(frozen=True)
class MovingAxleLoad:
    """Train of axle weights crossing a chain of deck nodes.

    Each axle force is shared between the two deck nodes bracketing it with
    linear (hat) weights, so every deck node sees a triangular pulse in time.
    Parameters are ``(speed km/h, axle mass t)``.
    """

    deck_nodes: tuple[int, ...]
    axle_offsets: tuple[float, ...] = (0.0, 2.7, 19.0, 21.7, 27.0, 29.7, 46.0, 48.7)

    def history(self, model: FEModel, params, times) -> np.ndarray:
        speed_kmh, mass_t = params
        xs = model.geometry.nodes[list(self.deck_nodes), 0]
        order = np.argsort(xs)
        xs = xs[order]
        dofs = np.array([model.free_index(self.deck_nodes[i], 1) for i in order])
        v = speed_kmh / 3.6
        weight = mass_t * 1e3 * GRAVITY
        F = np.zeros((model.ndofs, len(times)))
        eye = np.eye(len(xs))
        for off in self.axle_offsets:
            pos = xs[0] + v * np.asarray(times) - off
            on = (pos >= xs[0]) & (pos <= xs[-1])
            if not on.any():
                continue
            # hat weights of every deck node at each axle position
            w = np.stack([np.interp(pos[on], xs, eye[i]) for i in range(len(xs))])
            F[np.ix_(dofs, np.flatnonzero(on))] -= weight * w
        return F
