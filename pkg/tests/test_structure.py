import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dtwin.statespace import ConfigurationError
from dtwin.structure.fem import (
    FrameGeometry,
    Material,
    MovingAxleLoad,
    Section,
    assemble_model,
    l_frame,
    portal_frame,
)
from dtwin.structure.newmark import FactorizationError, newmark_integrate
from dtwin.structure.rom import galerkin_reduce, pod_basis, rom_solve_and_extract
from dtwin.structure.signals import (
    Recording,
    SensorMap,
    add_noise,
    latin_hypercube,
    n_samples,
    time_grid,
)
from dtwin.structure.simulator import build_case

CONCRETE = Material(30e9, 2500.0)


@pytest.fixture(scope="module")
def beam():
    return assemble_model(l_frame(), CONCRETE, 0.05)


@pytest.fixture(scope="module")
def beam_case():
    return build_case({"kind": "l_frame"})


def straight_cantilever(n_el=20, length=4.0, sec=Section(0.12, 0.3 * 0.4**3 / 12)):
    nodes = np.column_stack([np.linspace(0, length, n_el + 1), np.zeros(n_el + 1)])
    elements = [(i, i + 1) for i in range(n_el)]
    return FrameGeometry(nodes, elements, [sec] * n_el, [list(range(n_el))], [0, 1, 2])


# ---------------------------------------------------------------- assembly


def test_cantilever_first_frequency_matches_beam_theory():
    sec = Section(0.12, 0.3 * 0.4**3 / 12)
    model = assemble_model(straight_cantilever(sec=sec), CONCRETE)
    exact = 1.875104**2 / (2 * np.pi * 4.0**2) * np.sqrt(CONCRETE.youngs_modulus * sec.inertia / (CONCRETE.density * sec.area))
    assert model.natural_frequencies(n=1)[0] == pytest.approx(exact, rel=1e-4)


def test_undamaged_stiffness_is_baseline(beam):
    np.testing.assert_array_equal(beam.stiffness(0, 0.0), beam.K0)
    np.testing.assert_array_equal(beam.stiffness(3, 0.0), beam.K0)


def test_halved_region_equals_halved_sections():
    geom = l_frame()
    model = assemble_model(geom, CONCRETE)
    j = 5
    sections = list(geom.sections)
    for e in geom.regions[j - 1]:
        s = sections[e]
        sections[e] = Section(0.5 * s.area, 0.5 * s.inertia)
    weak = assemble_model(
        FrameGeometry(geom.nodes, geom.elements, sections, geom.regions, geom.fixed_dofs, geom.springs), CONCRETE
    )
    K = model.stiffness(j, 0.5)
    np.testing.assert_allclose(K, weak.K0, rtol=0, atol=1e-9 * np.abs(K).max())
    np.testing.assert_array_equal(K, K.T)


def test_mass_independent_of_damage(beam):
    # the model exposes a single mass matrix; damping only changes through K
    a0, a1 = beam.rayleigh
    C = beam.damping(2, 0.4)
    np.testing.assert_allclose(C, a0 * beam.M + a1 * beam.stiffness(2, 0.4))


def test_rayleigh_fit_gives_target_ratios(beam):
    w = 2 * np.pi * beam.natural_frequencies(n=2)
    a0, a1 = beam.rayleigh
    np.testing.assert_allclose(a0 / (2 * w) + a1 * w / 2, 0.05, rtol=1e-8)


@settings(max_examples=20, deadline=None)
@given(region=st.integers(1, 7), delta=st.floats(0.01, 0.8))
def test_damage_lowers_first_frequency(beam, region, delta):
    assert beam.natural_frequencies(region, delta, 1)[0] <= beam.natural_frequencies(n=1)[0]


def test_invalid_region_and_delta(beam):
    with pytest.raises(ConfigurationError):
        beam.stiffness(8, 0.3)
    with pytest.raises(ConfigurationError):
        beam.stiffness(1, 1.2)


def test_overlapping_regions_rejected():
    g = straight_cantilever(4)
    bad = FrameGeometry(g.nodes, g.elements, g.sections, [[0, 1], [1, 2]], g.fixed_dofs)
    with pytest.raises(ConfigurationError):
        assemble_model(bad, CONCRETE)


def test_case_study_sizes(beam):
    assert 100 <= beam.ndofs <= 300
    bridge = assemble_model(portal_frame(), Material(34e9, 2500.0))
    assert 100 <= bridge.ndofs <= 300
    assert bridge.n_regions == 6


def test_moving_load_conserves_axle_weight():
    case = build_case({"kind": "portal_frame"})
    t = case.times()
    F = case.load_history((180.0, 20.0))
    on_deck = -F.sum(axis=0) / (20e3 * 9.81)
    # hat weights of an axle sum to one, so the total is the axle count on the deck
    np.testing.assert_allclose(on_deck, np.round(on_deck), atol=1e-9)
    assert on_deck.max() <= 8 and on_deck[0] == pytest.approx(1.0)
    assert len(t) == 601


# ---------------------------------------------------------------- Newmark


def test_zero_load_zero_response():
    M, K = np.eye(2), np.diag([4.0, 9.0])
    X = newmark_integrate(M, np.zeros((2, 2)), K, np.zeros((2, 11)), 0.01)
    assert X.shape == (2, 10) and not X.any()


def test_undamped_energy_conserved():
    m, k = 2.0, 800.0
    M, K, C = np.array([[m]]), np.array([[k]]), np.zeros((1, 1))
    x, v, _ = newmark_integrate(M, C, K, np.zeros((1, 1001)), 0.01, x0=[0.01], v0=[0.3], return_all=True)
    E = 0.5 * m * v[0] ** 2 + 0.5 * k * x[0] ** 2
    assert np.max(np.abs(E - E[0])) / E[0] <= 1e-10


def test_slow_harmonic_forcing_is_quasi_static():
    k, m = 1e4, 1.0  # natural frequency 100 rad/s
    w = 0.1
    dt = 0.01
    t = np.arange(0, 2 * np.pi / w + dt, dt)
    F = (50.0 * np.sin(w * t))[None, :]
    X = newmark_integrate(np.array([[m]]), np.zeros((1, 1)), np.array([[k]]), F, dt)
    assert np.max(np.abs(X)) == pytest.approx(50.0 / k, rel=0.01)


def test_newmark_matches_exact_free_vibration():
    wn = 2 * np.pi * 2.0
    dt = 0.001
    X = newmark_integrate(np.eye(1), np.zeros((1, 1)), np.array([[wn**2]]), np.zeros((1, 501)), dt, x0=[1.0])
    t = dt * np.arange(1, 501)
    # period elongation of the average-acceleration rule is O((wn dt)^2)
    assert np.max(np.abs(X[0] - np.cos(wn * t))) < 1e-3


def test_singular_mass_raises():
    with pytest.raises(FactorizationError):
        newmark_integrate(np.zeros((1, 1)), np.zeros((1, 1)), np.eye(1), np.ones((1, 3)), 0.1)


def test_fom_harmonic_steady_state(beam_case):
    rec = beam_case.fom_recording((60.0, 20.0))
    assert rec.samples.shape == (200, 8)
    assert np.isfinite(rec.samples).all()


# ---------------------------------------------------------------- POD and ROM


def test_pod_rank_one():
    rng = np.random.default_rng(0)
    S = np.outer(rng.normal(size=30), rng.normal(size=50))
    assert pod_basis(S, 0.5).size == 1
    assert pod_basis(S, 1e-12).size == 1


def test_pod_zero_tolerance_full_rank():
    S = np.random.default_rng(1).normal(size=(12, 40))
    B = pod_basis(S, 0.0)
    assert B.size == 12
    np.testing.assert_allclose(B.W.T @ B.W, np.eye(12), atol=1e-10)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), eps=st.sampled_from([1e-1, 1e-2, 1e-3, 1e-4]))
def test_pod_energy_bound(seed, eps):
    rng = np.random.default_rng(seed)
    S = rng.normal(size=(40, 5)) @ rng.normal(size=(5, 60)) + 0.01 * rng.normal(size=(40, 60))
    B = pod_basis(S, eps)
    err = np.linalg.norm(S - B.W @ (B.W.T @ S)) ** 2 / np.linalg.norm(S) ** 2
    assert err <= eps + 1e-12
    assert np.all(np.diff(B.singular_values) <= 1e-12)
    np.testing.assert_allclose(B.W.T @ B.W, np.eye(B.size), atol=1e-10)
    if B.size > 1:  # one mode fewer would break the bound
        W = B.W[:, :-1]
        assert np.linalg.norm(S - W @ (W.T @ S)) ** 2 / np.linalg.norm(S) ** 2 > eps


def test_pod_rejects_zero_snapshots():
    with pytest.raises(ValueError):
        pod_basis(np.zeros((3, 4)))


def test_full_basis_rom_equals_fom(beam_case):
    m = beam_case.model
    rom = galerkin_reduce(m, np.eye(m.ndofs))
    op = (55.0, 33.0)
    fom = beam_case.fom_recording(op, 4, 0.6).samples
    red = beam_case.rom_recording(rom, op, 4, 0.6).samples
    assert np.linalg.norm(red - fom) / np.linalg.norm(fom) <= 1e-8


def test_reduced_mass_is_spd(beam_case):
    rng = np.random.default_rng(2)
    W, _ = np.linalg.qr(rng.normal(size=(beam_case.model.ndofs, 10)))
    rom = galerkin_reduce(beam_case.model, W)
    assert np.all(np.linalg.eigvalsh(rom.M) > 0)


def test_rom_extract_selects_lifted_dof(beam_case):
    m = beam_case.model
    rng = np.random.default_rng(3)
    W, _ = np.linalg.qr(rng.normal(size=(m.ndofs, 6)))
    rom = galerkin_reduce(m, W)
    F = beam_case.load_history((50.0, 12.0))
    dof = 17
    rec = rom_solve_and_extract(rom, SensorMap.from_dofs([dof], m.ndofs), F, beam_case.dt)
    Xr = newmark_integrate(rom.M, rom.damping(), rom.stiffness(), W.T @ F, beam_case.dt)
    np.testing.assert_allclose(rec.samples[:, 0], (W @ Xr)[dof], rtol=1e-12, atol=1e-18)


def test_basis_dimension_mismatch(beam_case):
    with pytest.raises(ValueError):
        galerkin_reduce(beam_case.model, np.eye(5))


# ---------------------------------------------------------------- signals


def test_sensor_map_rows_are_unit():
    smap = SensorMap.from_dofs([3, 0, 5], 6)
    assert (smap.table.sum(axis=1) == 1).all()
    X = np.arange(18.0).reshape(6, 3)
    np.testing.assert_array_equal(smap.extract(X), X[[3, 0, 5]].T)
    with pytest.raises(ValueError):
        SensorMap(np.array([[1, 1, 0]]))


def test_acquisition_grid():
    assert n_samples(1.0, 200.0) == 200
    assert n_samples(1.5, 400.0) == 600
    assert len(time_grid(1.0, 200.0)) == 201


def test_noise_infinite_snr_is_identity():
    rec = Recording(np.random.default_rng(0).normal(size=(50, 2)), 100.0, 0.5)
    out = add_noise(rec, np.inf, np.random.default_rng(1))
    np.testing.assert_array_equal(out.samples, rec.samples)


def test_noise_statistics_match_snr():
    rng = np.random.default_rng(4)
    t = np.arange(200) / 200
    x = np.column_stack([np.sin(2 * np.pi * 5 * t), 3 * np.cos(2 * np.pi * 11 * t), np.zeros(200)])
    rec = Recording(x, 200.0, 1.0)
    noise_power = np.zeros(3)
    for _ in range(1000):
        noise_power += np.mean((add_noise(rec, 100.0, rng).samples - x) ** 2, axis=0)
    noise_power /= 1000
    signal_power = np.mean(x**2, axis=0)
    np.testing.assert_allclose(signal_power[:2] / noise_power[:2], 100.0, rtol=0.05)
    assert noise_power[2] == 0.0  # a silent channel stays silent


def test_noise_seeded():
    rec = Recording(np.ones((10, 2)), 10.0, 1.0)
    a = add_noise(rec, 50.0, np.random.default_rng(7)).samples
    b = add_noise(rec, 50.0, np.random.default_rng(7)).samples
    np.testing.assert_array_equal(a, b)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 60), d=st.integers(1, 4), seed=st.integers(0, 2**32 - 1))
def test_latin_hypercube_strata(n, d, seed):
    ranges = [(10.0 * i, 10.0 * i + 5.0) for i in range(d)]
    X = latin_hypercube(ranges, n, np.random.default_rng(seed))
    assert X.shape == (n, d)
    for i, (lo, hi) in enumerate(ranges):
        strata = np.floor((X[:, i] - lo) / (hi - lo) * n).astype(int)
        assert sorted(strata.tolist()) == list(range(n))


def test_unrelated_helpers_are_reproducible(beam_case):
    a = beam_case.snapshot_matrix(np.array([[50.0, 20.0, 2, 0.5]]), stride=10)
    b = beam_case.snapshot_matrix(np.array([[50.0, 20.0, 2, 0.5]]), stride=10)
    assert a.shape == (beam_case.model.ndofs, 20)
    np.testing.assert_array_equal(a, b)


def test_moving_axle_rejects_unknown_kind():
    with pytest.raises(ConfigurationError):
        build_case({"kind": "arch"})
    assert isinstance(build_case({"kind": "portal_frame"}).load, MovingAxleLoad)
