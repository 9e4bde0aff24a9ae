"""Parametrized structural case: one FE model, one load family, one sensor layout."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..statespace import ConfigurationError
from .fem import FEModel, HarmonicLoad, Material, MovingAxleLoad, assemble_model, l_frame, portal_frame
from .newmark import newmark_integrate
from .rom import ReducedModel, rom_solve_and_extract
from .signals import Recording, SensorMap, n_samples, time_grid


@dataclass
class StructuralCase:
    model: FEModel
    load: HarmonicLoad | MovingAxleLoad
    sensors: SensorMap
    fs: float
    duration: float
    op_ranges: list[tuple[float, float]]

    @property
    def dt(self) -> float:
        return 1.0 / self.fs

    @property
    def n_steps(self) -> int:
        return n_samples(self.duration, self.fs)

    def times(self) -> np.ndarray:
        return time_grid(self.duration, self.fs)

    def load_history(self, op: Sequence[float]) -> np.ndarray:
        return self.load.history(self.model, op, self.times())

    def fom_response(self, op, region: int = 0, delta: float = 0.0) -> np.ndarray:
        """Nodal displacements ``(N_FE, L)`` at the acquisition instants."""
        m = self.model
        return newmark_integrate(
            m.M, m.damping(region, delta), m.stiffness(region, delta), self.load_history(op), self.dt
        )

    def fom_recording(self, op, region: int = 0, delta: float = 0.0) -> Recording:
        X = self.fom_response(op, region, delta)
        return Recording(self.sensors.extract(X), self.fs, self.duration)

    def rom_recording(self, rom: ReducedModel, op, region: int = 0, delta: float = 0.0) -> Recording:
        rec = rom_solve_and_extract(
            rom, self.sensors, self.load_history(op), self.dt, region, delta, fs=self.fs
        )
        return Recording(rec.samples, self.fs, self.duration)

    def snapshot_matrix(self, mus: np.ndarray, stride: int = 1) -> np.ndarray:
        """Columns are FOM displacement vectors; ``mus`` rows are ``(*op, region, delta)``."""
        n_op = len(self.op_ranges)
        cols = []
        for mu in mus:
            X = self.fom_response(mu[:n_op], int(mu[n_op]), float(mu[n_op + 1]))
            cols.append(X[:, stride - 1 :: stride])
        return np.hstack(cols)


def _beam_case(cfg: dict, material: Material, damping: float) -> StructuralCase:
    g = cfg.get("geometry", {})
    n_el = int(g.get("elements_per_arm", 20))
    geom = l_frame(
        arm_length=float(g.get("arm_length", 4.0)),
        elements_per_arm=n_el,
        width=float(g.get("width", 0.3)),
        height=float(g.get("height", 0.4)),
        column_regions=int(g.get("column_regions", 4)),
        arm_regions=int(g.get("arm_regions", 3)),
    )
    model = assemble_model(geom, material, damping)
    tip = 2 * n_el  # last node of the arm
    load = HarmonicLoad(node=int(g.get("load_node", tip)), component=1, area=float(g.get("load_area", 0.09)))
    n_u = int(cfg.get("n_sensors", 8))
    half = n_u // 2
    col_nodes = np.linspace(0, n_el, half + 1).round().astype(int)[1:]
    arm_nodes = np.linspace(n_el, 2 * n_el, n_u - half + 1).round().astype(int)[1:]
    dofs = [model.free_index(int(nd), 0) for nd in col_nodes]
    dofs += [model.free_index(int(nd), 1) for nd in arm_nodes]
    sensors = SensorMap.from_dofs(dofs, model.ndofs)
    ranges = [tuple(cfg.get("load_amplitude_kpa", (40.0, 80.0))), tuple(cfg.get("load_frequency_hz", (10.0, 60.0)))]
    return StructuralCase(model, load, sensors, float(cfg.get("fs", 200.0)), float(cfg.get("duration", 1.0)), ranges)


def _bridge_case(cfg: dict, material: Material, damping: float) -> StructuralCase:
    g = cfg.get("geometry", {})
    n_deck = int(g.get("deck_elements", 32))
    n_wall = int(g.get("wall_elements", 10))
    geom = portal_frame(
        span=float(g.get("span", 15.7)),
        height=float(g.get("height", 4.7)),
        deck_elements=n_deck,
        wall_elements=n_wall,
        width=float(g.get("width", 5.9)),
        deck_thickness=float(g.get("deck_thickness", 0.5)),
        wall_thickness=float(g.get("wall_thickness", 0.7)),
        base_spring=float(g.get("base_spring", 1e9)),
        deck_regions=int(g.get("deck_regions", 4)),
    )
    model = assemble_model(geom, material, damping)
    deck_nodes = tuple(range(n_wall, n_wall + n_deck + 1))
    load = MovingAxleLoad(deck_nodes=deck_nodes)
    n_u = int(cfg.get("n_sensors", 10))
    n_deck_sensors = n_u - 2
    picks = np.linspace(0, n_deck, n_deck_sensors + 2).round().astype(int)[1:-1]
    dofs = [model.free_index(deck_nodes[i], 1) for i in picks]
    mid_wall = n_wall // 2
    last = len(geom.nodes) - 1
    dofs += [model.free_index(mid_wall, 0), model.free_index(last - mid_wall, 0)]
    sensors = SensorMap.from_dofs(dofs, model.ndofs)
    ranges = [tuple(cfg.get("speed_kmh", (160.0, 215.0))), tuple(cfg.get("axle_mass_t", (16.0, 22.0)))]
    return StructuralCase(model, load, sensors, float(cfg.get("fs", 400.0)), float(cfg.get("duration", 1.5)), ranges)


def build_case(cfg: dict) -> StructuralCase:
    """Structural case from the ``structure`` section of a run configuration."""
    mat = cfg.get("material", {})
    material = Material(float(mat.get("youngs_modulus", 30e9)), float(mat.get("density", 2500.0)))
    damping = float(cfg.get("damping_ratio", 0.05))
    kind = cfg.get("kind")
    if kind == "l_frame":
        return _beam_case(cfg, material, damping)
    if kind == "portal_frame":
        return _bridge_case(cfg, material, damping)
    raise ConfigurationError(f"unknown structure kind {kind!r}")
