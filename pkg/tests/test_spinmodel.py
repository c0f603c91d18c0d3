import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dipolar_spin_sim.couplings import HarmonicCrystal
from dipolar_spin_sim.crystal import CrystalSpec
from dipolar_spin_sim.dynamics import plus_state, spin_configurations, zz_diagonal
from dipolar_spin_sim.errors import DimensionMismatch, ResonantDrive
from dipolar_spin_sim.spinmodel import (IsingSpec, NamedState, OrderLabel, adiabatic_sweep,
                                        basis_index, classical_minimum, classify_order,
                                        ground_state, hamiltonian, ising_evolve,
                                        literal_graph_state, minus_state, gaussian_schedule,
                                        phase_diagram, sigma_x_sum)


def couplings_from(values, n):
    g = np.zeros((n, n))
    g[np.triu_indices(n, 1)] = values
    return g + g.T


@pytest.fixture(scope="module")
def trio():
    return HarmonicCrystal.build(CrystalSpec(3))


def test_basis_index():
    assert basis_index("ggg") == 0
    assert basis_index("egg") == 1
    assert basis_index("gge") == 4


@pytest.mark.parametrize("state", list(NamedState))
def test_named_states_normalized(state):
    assert np.linalg.norm(state.vector()) == pytest.approx(1.0)


def test_graph_state_from_uniform_ising_phase():
    out = ising_evolve(IsingSpec(couplings_from([1, 1, 1], 3)), plus_state(3), np.pi / 4)
    assert abs(np.vdot(NamedState.GRAPH3.vector(), out)) ** 2 == pytest.approx(1.0)
    # the controlled-Z form differs from it by sigma^z on every qubit
    assert abs(np.vdot(literal_graph_state(), out)) ** 2 == pytest.approx(0.0, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6).flatmap(
    lambda n: st.tuples(st.just(n), st.lists(st.floats(-2, 2), min_size=n * (n - 1) // 2,
                                             max_size=n * (n - 1) // 2))))
def test_zero_field_ground_energy_is_classical_minimum(args):
    n, vals = args
    g = couplings_from(vals, n)
    e, configs = classical_minimum(g)
    gs = ground_state(IsingSpec(g, 0.0))
    assert gs.energy == pytest.approx(e, abs=1e-10)
    assert gs.degeneracy >= len(configs)
    # the regularizing field b ~ 1e-6 G_rms leaks weight ~ n (b / gap)^2 onto
    # configurations a gap above the minimum; beyond gap 1e-2 that is < 1e-6
    near = np.flatnonzero(zz_diagonal(g) - e < 1e-2)
    assert np.sum(np.abs(gs.state[near]) ** 2) > 1 - 1e-6


def test_frustrated_triangle_degeneracy():
    gs = ground_state(IsingSpec(couplings_from([1, 1, 1], 3), 0.0))
    assert gs.degeneracy == 6
    assert gs.energy == pytest.approx(-1.0)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=6, max_size=6), st.floats(0.01, 2.0))
def test_ground_state_has_spin_flip_parity(vals, b):
    g = couplings_from(vals, 4)
    gs = ground_state(IsingSpec(g, b))
    if gs.degeneracy == 1:
        flipped = gs.state[::-1]  # every spin flipped
        assert abs(abs(np.vdot(flipped, gs.state)) - 1) < 1e-8


@settings(max_examples=20, deadline=None)
@given(st.floats(0.1, 10.0))
def test_labels_scale_invariant(scale):
    g = couplings_from([1.0, 0.3, 1.0], 3)
    a = ground_state(IsingSpec(g, 0.05 * 0.8))
    b = ground_state(IsingSpec(scale * g, scale * 0.05 * 0.8))
    assert classify_order(a.state).label is classify_order(b.state).label
    assert b.energy == pytest.approx(scale * a.energy)


def test_large_field_is_paramagnetic():
    gs = ground_state(IsingSpec(couplings_from([1, 1, 1], 3), 100.0))
    assert classify_order(gs.state).label is OrderLabel.PARAMAGNETIC
    assert abs(np.vdot(minus_state(3), gs.state)) ** 2 > 0.99


def test_sparse_path_matches_dense():
    rng = np.random.default_rng(2)
    n = 11
    g = couplings_from(rng.normal(size=n * (n - 1) // 2), n)
    gs = ground_state(IsingSpec(g, 0.7))
    h = hamiltonian(g, 0.7)
    assert np.vdot(gs.state, h @ gs.state).real == pytest.approx(gs.energy, abs=1e-8)


def test_sigma_x_sum_flips_single_spins():
    sx = sigma_x_sum(3).toarray()
    assert np.allclose(sx, sx.T)
    assert sx[0].nonzero()[0].tolist() == [1, 2, 4]


@pytest.mark.parametrize("omega,label", [(1.0, OrderLabel.AFMS), (1.6, OrderLabel.FM),
                                         (2.8, OrderLabel.AFMS), (3.2, OrderLabel.AFMA),
                                         (4.5, OrderLabel.AFMS)])
def test_table_labels(trio, omega, label):
    cs = trio.couplings(omega)
    gs = ground_state(IsingSpec(cs.g_total, 0.05 * cs.g_rms))
    assert classify_order(gs.state).label is label


def test_phase_diagram_guard(trio):
    with pytest.raises(ResonantDrive):
        phase_diagram(trio, [2.2], [0.1])
    pts = phase_diagram(trio, [2.2, 3.0], [0.0, 0.5], skip_invalid=True)
    assert {p.omega for p in pts} == {3.0}
    assert len(pts) == 2


def test_adiabatic_sweep_reaches_afms(trio):
    cs = trio.couplings(2.65)
    res = adiabatic_sweep(IsingSpec(cs.g_total, gaussian_schedule(cs.g_rms)), n_samples=31,
                          track_ground_state=True)
    assert res.norm_error < 1e-8
    assert res.overlaps["AFMS"][-1] > 0.95
    # the strong initial field nearly, but not exactly, polarizes the ground state
    assert res.ground_fidelity[0] > 0.99


def test_schedule_shape():
    f = gaussian_schedule(2.0)
    assert f(0.0) == pytest.approx(20.0)
    assert f(60.0) / 20.0 == pytest.approx(np.exp(-3600 / (50 * np.pi)))


def test_ising_evolve_checks():
    spec = IsingSpec(couplings_from([1, 1, 1], 3), 0.3)
    with pytest.raises(ValueError):
        ising_evolve(spec, plus_state(3), 1.0)
    with pytest.raises(DimensionMismatch):
        ising_evolve(IsingSpec(couplings_from([1, 1, 1], 3)), plus_state(2), 1.0)


def test_ising_spec_validation():
    with pytest.raises(DimensionMismatch):
        IsingSpec(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        IsingSpec(np.array([[0, 1.0], [2.0, 0]]))


def test_spin_configurations_match_labels():
    s = spin_configurations(3)
    assert s[basis_index("geg")].tolist() == [1, -1, 1]
