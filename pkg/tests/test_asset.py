import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dtwin.asset import (
    UNDAMAGED,
    DegradationSpec,
    GroundTruth,
    RepairSpec,
    discretize,
    sample_operational_params,
    simulate_trajectory,
    step_ground_truth,
)
from dtwin.statespace import build_state_space

EDGES = [0.30, 0.35, 0.45, 0.55, 0.65, 0.75, 0.80]
DN = DegradationSpec(0.5, (0.30, 0.35))
PM = RepairSpec(full_reset=True)
MI = RepairSpec(-0.125, 0.01)
MA = RepairSpec(-0.175, 0.01)


def test_ground_truth_validation():
    with pytest.raises(ValueError):
        GroundTruth(0, 0.4)
    with pytest.raises(ValueError):
        GroundTruth(2, -0.1)


def test_certain_inception():
    rng = np.random.default_rng(0)
    gt = step_ground_truth(UNDAMAGED, DegradationSpec(1.0, (0.30, 0.30)), rng, 7)
    assert 1 <= gt.region <= 7 and gt.delta == 0.30


def test_no_inception():
    rng = np.random.default_rng(0)
    assert step_ground_truth(UNDAMAGED, DegradationSpec(0.0), rng, 7) == UNDAMAGED


def test_inception_frequency():
    rng = np.random.default_rng(1)
    hits = sum(step_ground_truth(UNDAMAGED, DN, rng, 7).region != 0 for _ in range(4000))
    assert abs(hits / 4000 - 0.5) < 3 * np.sqrt(0.25 / 4000)


def test_growth_clamped():
    rng = np.random.default_rng(0)
    gt = step_ground_truth(GroundTruth(3, 0.795), DegradationSpec(0.5, growth_mean=0.05, growth_std=0.0), rng, 7)
    assert gt == GroundTruth(3, 0.80)


def test_negative_growth_truncated():
    rng = np.random.default_rng(0)
    gt = step_ground_truth(GroundTruth(3, 0.5), DegradationSpec(0.5, growth_mean=-1.0, growth_std=0.0), rng, 7)
    assert gt.delta == 0.5


def test_repair_examples():
    rng = np.random.default_rng(2)
    assert step_ground_truth(GroundTruth(4, 0.7), PM, rng, 7) == UNDAMAGED
    # minor repair from 0.55 stays damaged, from 0.31 recovers
    got = step_ground_truth(GroundTruth(4, 0.55), RepairSpec(-0.125, 0.0), rng, 7)
    assert got.region == 4 and got.delta == pytest.approx(0.425)
    assert step_ground_truth(GroundTruth(4, 0.31), RepairSpec(-0.175, 0.0), rng, 7) == UNDAMAGED


def test_discretize():
    sp = build_state_space(7, EDGES)
    assert discretize(UNDAMAGED, sp) == 0
    assert discretize(GroundTruth(1, 0.30), sp) == 1
    assert discretize(GroundTruth(7, 0.80), sp) == 42
    assert discretize(GroundTruth(2, 0.45), sp) == sp.index(2, 3)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), steps=st.integers(1, 60))
def test_degradation_is_monotone_and_bounded(seed, steps):
    rng = np.random.default_rng(seed)
    traj = simulate_trajectory([0] * steps, {0: DN}, rng, 7)
    for a, b in zip(traj, traj[1:]):
        assert b.delta >= a.delta
        assert a.region == 0 or b.region == a.region
        assert b.delta <= 0.80


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), delta=st.floats(0.30, 0.80), which=st.sampled_from([MI, MA]))
def test_repair_never_worsens(seed, delta, which):
    rng = np.random.default_rng(seed)
    gt = step_ground_truth(GroundTruth(5, delta), which, rng, 7)
    assert gt.region == 0 or (gt.region == 5 and gt.delta <= delta and gt.delta >= 0.30)


def test_seeded_reproducibility():
    a = simulate_trajectory([0] * 30, {0: DN}, np.random.default_rng(9), 7)
    b = simulate_trajectory([0] * 30, {0: DN}, np.random.default_rng(9), 7)
    assert a == b


def test_operational_params_in_range():
    rng = np.random.default_rng(3)
    for _ in range(100):
        q, f = sample_operational_params([(40, 80), (10, 60)], rng)
        assert 40 <= q <= 80 and 10 <= f <= 60
