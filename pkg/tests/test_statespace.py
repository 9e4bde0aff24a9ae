import numpy as np
import pytest

from dtwin.statespace import ConfigurationError, build_state_space, check_belief, map_state

BEAM_EDGES = [0.30, 0.35, 0.45, 0.55, 0.65, 0.75, 0.80]


def test_case_study_sizes():
    assert build_state_space(7, BEAM_EDGES).n_states == 43
    assert build_state_space(6, BEAM_EDGES).n_states == 37


def test_minimal_lattice():
    sp = build_state_space(1, [(0.3, 0.8)])
    assert sp.n_states == 2
    assert sp.cell(1) == (1, 1)
    assert sp.index(1, 1) == 1


def test_interval_pairs_and_edges_agree():
    pairs = list(zip(BEAM_EDGES[:-1], BEAM_EDGES[1:]))
    assert build_state_space(7, pairs) == build_state_space(7, BEAM_EDGES)


def test_index_map_is_bijective():
    sp = build_state_space(7, BEAM_EDGES)
    seen = {sp.index(*sp.cell(s)) for s in range(sp.n_states)}
    assert seen == set(range(sp.n_states))
    assert sp.index(6, 2) == 32
    assert sp.index(1, 6) == 6


@pytest.mark.parametrize(
    "bounds",
    [[], [0.3], [0.3, 0.3, 0.4], [0.5, 0.4], [(0.3, 0.35), (0.36, 0.4)], [0.3, float("nan")]],
)
def test_bad_bounds_rejected(bounds):
    with pytest.raises(ConfigurationError):
        build_state_space(3, bounds)


def test_bad_region_count_rejected():
    with pytest.raises(ConfigurationError):
        build_state_space(0, BEAM_EDGES)


def test_interval_edges():
    sp = build_state_space(7, BEAM_EDGES)
    assert sp.interval_of(0.30) == 1
    assert sp.interval_of(0.35) == 2
    assert sp.interval_of(0.80) == 6
    with pytest.raises(ValueError):
        sp.interval_of(0.29)


def test_digest_changes_with_lattice():
    a = build_state_space(7, BEAM_EDGES)
    assert a.digest() == build_state_space(7, BEAM_EDGES).digest()
    assert a.digest() != build_state_space(6, BEAM_EDGES).digest()


def test_belief_helpers():
    check_belief([0.25, 0.75], 2)
    with pytest.raises(ValueError):
        check_belief([0.2, 0.7], 2)
    with pytest.raises(ValueError):
        check_belief([1.2, -0.2])
    assert map_state(np.array([0.4, 0.4, 0.2])) == 0
