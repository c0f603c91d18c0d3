import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dipolar_spin_sim.couplings import (DriveSpec, HarmonicCrystal, harmonic_couplings,
                                        in_valid_region, mediated_couplings, ring_bare_couplings,
                                        ring_coupling_matrix, ring_distance,
                                        ring_mediated_couplings, ring_phonon_coupling)
from dipolar_spin_sim.crystal import CrystalSpec, Trap, ring_frequency
from dipolar_spin_sim.errors import ResonantDrive
from dipolar_spin_sim.ring import midpoint


@pytest.fixture(scope="module")
def trio():
    return HarmonicCrystal.build(CrystalSpec(3))


def test_two_molecules_breathing_coupling():
    c = HarmonicCrystal.build(CrystalSpec(2))
    assert np.allclose(c.g_spin_phonon[0], 0.0)
    # both molecules couple with the same sign and magnitude sqrt(3)
    assert np.allclose(c.g_spin_phonon[1], [np.sqrt(3), np.sqrt(3)])


def test_two_molecule_regions():
    c = HarmonicCrystal.build(CrystalSpec(2))
    r = c.valid_regions()
    assert r[0][1] == pytest.approx(1.9465, abs=1e-4)
    assert r[1][0] == pytest.approx(2.5256, abs=1e-4)
    assert r[-1][1] == np.inf


def test_three_molecule_regions(trio):
    edges = [b for lo, hi in trio.valid_regions() for b in (lo, hi) if 0 < b < np.inf]
    assert np.allclose(edges, [1.83878, 2.63336, 3.23153, 3.78106], atol=1e-4)


def test_equal_coupling_point(trio):
    g = trio.couplings(2.977).g_total
    assert np.allclose([g[0, 1], g[0, 2], g[1, 2]], [0.91119, 0.91090, 0.91119], atol=2e-5)


def test_asymmetric_region_two(trio):
    g = trio.couplings(3.2).g_total
    assert g[0, 2] > g[0, 1] > 0
    assert g[0, 1] == pytest.approx(0.803, abs=1e-3)
    assert g[0, 2] == pytest.approx(1.264, abs=1e-3)


def test_coupling_matrix_symmetries(trio):
    cs = trio.couplings(1.0)
    g = cs.g_total
    assert np.allclose(g, g.T)
    assert np.allclose(np.diag(g), 0)
    # mirror symmetry of the trap
    assert g[0, 1] == pytest.approx(g[1, 2])


def test_far_detuned_limit_is_half_bare(trio):
    cs = trio.couplings(1e4)
    assert np.allclose(cs.g_total, cs.g_bare / 2, rtol=1e-6, atol=1e-9)


def test_resonance_guard(trio):
    with pytest.raises(ResonantDrive) as info:
        trio.couplings(2.2)
    assert info.value.omega == 2.2
    cs = trio.couplings(2.2, override_guard=True)
    assert np.all(np.isfinite(cs.g_total))
    assert not in_valid_region(2.2, trio.valid_regions())


def test_com_mode_never_forbids(trio):
    # the centre-of-mass mode at omega=1 carries no coupling
    cs = trio.couplings(1.0)
    assert np.allclose(cs.spin_phonon_nu[0], 0)


@settings(max_examples=20, deadline=None)
@given(st.floats(min_value=0.01, max_value=0.2))
def test_normalized_couplings_independent_of_epsilon(eps):
    a = harmonic_couplings(3, 3.0, epsilon=0.1)
    b = harmonic_couplings(3, 3.0, epsilon=eps, override_guard=True)
    assert np.allclose(a.g_total, b.g_total)
    assert np.allclose(b.total_nu, 0.5 * eps ** 2 * b.g_total)


def test_mediated_matches_mode_sum(trio):
    drive = DriveSpec(3.0, override_guard=True)
    g1 = mediated_couplings(trio.g_spin_phonon, trio.spectrum, drive)
    w = trio.spectrum.frequencies
    g = trio.g_spin_phonon
    manual = sum(np.outer(g[n], g[n]) / (3.0 ** 2 - w[n] ** 2) for n in range(3))
    np.fill_diagonal(manual, 0)
    assert np.allclose(g1, manual)


def test_drive_spec_rejects_nonpositive():
    with pytest.raises(ValueError):
        DriveSpec(0.0)


def test_ring_translation_invariance():
    spec = CrystalSpec(11, Trap.RING)
    g = ring_coupling_matrix(spec, midpoint(11, 2))
    for i in range(11):
        for j in range(11):
            assert g[i, j] == pytest.approx(g[0, ring_distance(11, i, j)])


def test_ring_profile_symmetric_in_distance():
    spec = CrystalSpec(21, Trap.RING)
    d = np.arange(1, 21)
    g1 = ring_mediated_couplings(spec, midpoint(21, 1), d)
    assert np.allclose(g1, g1[::-1])
    assert np.allclose(ring_bare_couplings(21, d), ring_bare_couplings(21, 21 - d))


def test_ring_gamma_independence():
    a = ring_mediated_couplings(CrystalSpec(21, Trap.RING, gamma=100.0), 3.0, np.arange(11),
                                override_guard=True)
    b = ring_mediated_couplings(CrystalSpec(21, Trap.RING, gamma=1e4), 3.0, np.arange(11),
                                override_guard=True)
    assert np.max(np.abs(a - b)) < 1e-12


def test_ring_phonon_coupling_vanishes_at_zone_edges():
    assert ring_phonon_coupling(20, 0) == 0
    assert abs(ring_phonon_coupling(20, 10)) < 1e-12
    assert abs(ring_phonon_coupling(20, 10, exact=True)) < 1e-12


def test_ring_guard():
    spec = CrystalSpec(21, Trap.RING)
    with pytest.raises(ResonantDrive):
        ring_mediated_couplings(spec, float(ring_frequency(21, 3)) + 1e-3, 1)
