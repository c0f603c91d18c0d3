import numpy as np
import pytest

from dipolar_spin_sim.errors import NoCrossing, OutsideLinearWindow, TrackingAmbiguity
from dipolar_spin_sim.rotor import (RotorSpec, _diagonalize, _dipole_at, _track, ac_amplitude_for,
                                    cos_elements, dipole_moments, dipole_slope, find_sweet_spot,
                                    linear_window, modulation_depth, stark_map)


@pytest.fixture(scope="module")
def smap():
    return stark_map(RotorSpec())


@pytest.fixture(scope="module")
def sweet(smap):
    return find_sweet_spot(smap, (1, 2))


def test_cos_elements():
    assert cos_elements(2)[0] == pytest.approx(1 / np.sqrt(3))
    assert cos_elements(2)[1] == pytest.approx(2 / np.sqrt(15))


def test_zero_field_has_no_dipole(smap):
    assert np.allclose(smap.dipoles[0], 0)
    assert np.allclose(smap.energies[0], [j * (j + 1) for j in range(13)])


def test_small_field_linear_response():
    e = 0.01
    _, v = _diagonalize(e, 12)
    mu = dipole_moments(v, 12)[0]
    assert mu == pytest.approx(e / 3, rel=0.01)


def test_dipoles_bounded_and_sum_to_zero(smap):
    assert np.all(np.abs(smap.dipoles) < 1)
    # trace of cos(theta) in the truncated block vanishes
    assert np.allclose(smap.dipoles.sum(axis=1), 0, atol=1e-10)


def test_hellmann_feynman(smap):
    h = smap.fields[1] - smap.fields[0]
    de = (smap.energies[2:] - smap.energies[:-2]) / (2 * h)
    # central differences on the 0.01 grid carry O(h^2) error; check on a fine stencil too
    assert np.max(np.abs(smap.dipoles[1:-1] + de)[:, :4]) < 1e-4
    for f in (0.5, 2.0, 4.5):
        eps = 1e-4
        ep, _ = _diagonalize(f + eps, 12)
        em, _ = _diagonalize(f - eps, 12)
        _, v = _diagonalize(f, 12)
        assert np.allclose(dipole_moments(v, 12), -(ep - em) / (2 * eps), atol=1e-6)


def test_sweet_spot_pinned(sweet):
    assert sweet.field == pytest.approx(3.0479, abs=1e-4)
    assert sweet.dipole == pytest.approx(-0.1604, abs=1e-4)
    assert sweet.slopes[0] == pytest.approx(0.0712, abs=1e-4)
    assert sweet.slopes[1] == pytest.approx(-0.0564, abs=1e-4)


def test_sweet_spot_symmetric_in_state_order(smap, sweet):
    other = find_sweet_spot(smap, (2, 1))
    assert other.field == pytest.approx(sweet.field, abs=1e-10)


def test_no_crossing_for_lowest_pair(smap):
    with pytest.raises(NoCrossing):
        find_sweet_spot(smap, (0, 1))


def test_basis_convergence(sweet):
    bigger = find_sweet_spot(stark_map(RotorSpec(j_max=14)), (1, 2))
    assert abs(bigger.field - sweet.field) < 1e-6


def test_slope_matches_finite_difference(smap, sweet):
    for j, s in zip(sweet.states, sweet.slopes):
        h = 1e-3
        fd = (_dipole_at(sweet.field + h, j, smap) - _dipole_at(sweet.field - h, j, smap)) / (2 * h)
        assert s == pytest.approx(fd, abs=1e-6)
        assert dipole_slope(smap, j, sweet.field) == pytest.approx(s)


def test_linear_window(smap, sweet):
    lo, hi = linear_window(smap, sweet)
    assert lo < sweet.field < hi
    assert lo == pytest.approx(2.5522, abs=2e-3)
    assert hi == pytest.approx(3.5436, abs=2e-3)
    assert linear_window(smap, sweet, 0.0) == (sweet.field, sweet.field)
    wide = linear_window(smap, sweet, 0.01)
    narrow = linear_window(smap, sweet, 0.001)
    assert wide[0] <= lo <= narrow[0] and narrow[1] <= hi <= wide[1]


def test_modulation_depth(smap, sweet):
    win = linear_window(smap, sweet)
    assert modulation_depth(sweet, 0.0, win) == 0.0
    e_ac = ac_amplitude_for(sweet, 0.1)
    assert modulation_depth(sweet, e_ac, win) == pytest.approx(0.1)
    with pytest.raises(OutsideLinearWindow):
        modulation_depth(sweet, 1.0, win)
    # the two states give similar depths at the same amplitude
    assert abs(sweet.modulation_depth(e_ac, 0) - sweet.modulation_depth(e_ac, 1)) < 0.03


def test_tracking_ambiguity_without_refinement():
    with pytest.raises(TrackingAmbiguity):
        _track(np.array([0.0, 60.0]), 8, refine_depth=0)


def test_spec_validation():
    with pytest.raises(ValueError):
        RotorSpec(j_max=4)
    with pytest.raises(ValueError):
        RotorSpec(fields=(0.0, 1.0, 0.5))
