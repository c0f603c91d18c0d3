import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dipolar_spin_sim.crystal import (CrystalSpec, Trap, phonon_modes, ring_dynamical_matrix,
                                      ring_frequency, ring_spectrum, solve_equilibrium,
                                      trap_gradient)
from dipolar_spin_sim.errors import NonConvergence


def test_two_molecule_spacing_is_sixth_root():
    eq = solve_equilibrium(CrystalSpec(2))
    assert abs(eq.xi - 6 ** 0.2) < 1e-12
    assert np.allclose(eq.positions, [-0.5, 0.5])


def test_three_molecule_spacing():
    assert solve_equilibrium(CrystalSpec(3)).xi == pytest.approx(1.26093, abs=1e-5)


@pytest.mark.parametrize("n,xi", [(5, 1.0204), (10, 0.7697), (20, 0.5840), (30, 0.4967)])
def test_spacing_pinned(n, xi):
    assert solve_equilibrium(CrystalSpec(n)).xi == pytest.approx(xi, abs=1e-4)


@settings(max_examples=15, deadline=None)
@given(st.integers(min_value=2, max_value=16))
def test_equilibrium_properties(n):
    eq = solve_equilibrium(CrystalSpec(n))
    x = eq.positions
    assert eq.residual < 1e-10
    assert np.max(np.abs(trap_gradient(x * eq.xi))) < 1e-10
    assert np.allclose(x, -x[::-1], atol=1e-12)
    assert np.min(np.diff(x)) == pytest.approx(1.0)
    # spacing is smallest at the centre
    d = np.diff(x)
    assert np.argmin(d) in (len(d) // 2, (len(d) - 1) // 2)


@settings(max_examples=15, deadline=None)
@given(st.integers(min_value=2, max_value=14))
def test_modes_orthonormal_with_unit_com(n):
    sp = phonon_modes(CrystalSpec(n))
    c = sp.modes
    assert np.allclose(c @ c.T, np.eye(n), atol=1e-10)
    assert np.all(np.diff(sp.frequencies) >= -1e-12)
    assert sp.frequencies[0] == pytest.approx(1.0, abs=1e-9)
    assert np.allclose(c[0], 1 / np.sqrt(n), atol=1e-9)
    assert sp.zero_modes == 0


def test_three_molecule_frequencies():
    w = phonon_modes(CrystalSpec(3)).frequencies
    assert np.allclose(w, [1.0, np.sqrt(5.0), 3.50630], atol=1e-5)


def test_single_molecule():
    sp = phonon_modes(CrystalSpec(1))
    assert sp.frequencies.tolist() == [1.0]


def test_nonconvergence_reports_residual():
    with pytest.raises(NonConvergence) as info:
        solve_equilibrium(CrystalSpec(20), max_iter=1)
    assert info.value.best_residual > 0


def test_spec_validation():
    with pytest.raises(ValueError):
        CrystalSpec(0)
    with pytest.raises(ValueError):
        CrystalSpec(3, epsilon=0.6)
    with pytest.raises(ValueError):
        CrystalSpec(5, Trap.RING, gamma=1.0)
    with pytest.warns(UserWarning):
        CrystalSpec(3, epsilon=0.3)
    with pytest.warns(UserWarning):
        CrystalSpec(5, Trap.RING, gamma=50)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert CrystalSpec(3, "ring").trap is Trap.RING


def test_ring_single_zero_mode_and_dispersion():
    n = 21
    sp = phonon_modes(CrystalSpec(n, Trap.RING))
    assert sp.zero_modes == 1
    assert np.all(sp.frequencies[1:] > 0)
    k = np.arange(-(n // 2), n // 2 + 1)
    expected = np.sort(ring_frequency(n, k, exact=True))
    assert np.allclose(sp.frequencies, expected, atol=1e-10)


def test_ring_closed_form_tracks_exact_sum():
    n = 21
    k = np.arange(1, 11)
    closed = ring_frequency(n, k)
    exact = ring_frequency(n, k, exact=True)
    # long-range tail matters most for long wavelengths
    assert np.max(np.abs(exact / closed - 1)) < 0.1
    assert abs(exact[-1] / closed[-1] - 1) < 0.003
    assert closed[-1] == pytest.approx(2 * np.sqrt(12) * np.sin(10 * np.pi / 21))


def test_ring_matrix_rows_sum_to_zero():
    k = ring_dynamical_matrix(9)
    assert np.allclose(k.sum(axis=1), 0.0)
    assert np.allclose(k, k.T)


def test_ring_spectrum_phases():
    spec = CrystalSpec(7, Trap.RING)
    w, ph = ring_spectrum(spec, 2)
    assert w == pytest.approx(ring_frequency(7, 2))
    assert np.allclose(np.abs(ph), 1)
    assert ph[1] == pytest.approx(np.exp(2j * np.pi * 2 / 7))
    with pytest.raises(ValueError):
        ring_spectrum(spec, 5)
