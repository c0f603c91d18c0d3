"""Stark map of a rigid rotor in a static field, ``M = 0`` block.

Energies are in units of the rotational constant ``B``, fields in ``B / mu_c``
and dipole moments in ``mu_c``.  Adiabatic labels ``|J, 0>`` follow the
zero-field state by overlap continuity along the field grid.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import brentq

from .errors import NoCrossing, OutsideLinearWindow, TrackingAmbiguity

MIN_JMAX = 6
OVERLAP_FLOOR = 0.5
REFINE_BELOW = 0.9
LINEAR_TOLERANCE = 0.005


@dataclass(frozen=True)
class RotorSpec:
    """Basis size and field grid.

    Parameters
    ----------
    j_max : int
        Highest rotational quantum number kept.
    fields : array
        Strictly increasing dc fields in units ``B / mu_c``.
    """

    j_max: int = 12
    fields: tuple = tuple(np.linspace(0.0, 6.0, 601))

    def __post_init__(self):
        if self.j_max < MIN_JMAX:
            raise ValueError(f"j_max must be at least {MIN_JMAX}")
        f = np.asarray(self.fields, dtype=float)
        if f.ndim != 1 or f.size < 2 or np.any(np.diff(f) <= 0):
            raise ValueError("field grid must be strictly increasing with at least two points")
        object.__setattr__(self, "fields", tuple(f))


def cos_elements(j_max):
    """Off-diagonal ``<J+1,0| cos(theta) |J,0> = (J+1)/sqrt((2J+1)(2J+3))``."""
    j = np.arange(j_max)
    return (j + 1) / np.sqrt((2 * j + 1) * (2 * j + 3))


def _diagonalize(field, j_max):
    j = np.arange(j_max + 1)
    return eigh_tridiagonal(j * (j + 1.0), -field * cos_elements(j_max))


def dipole_moments(vectors, j_max):
    """``<cos(theta)>`` for every column of ``vectors``."""
    c = cos_elements(j_max)
    return 2.0 * np.sum(vectors[:-1] * vectors[1:] * c[:, None], axis=0)


@dataclass(frozen=True)
class StarkMap:
    """Energies and induced dipoles ``[field, J]`` with columns labelled by adiabatic ``J``."""

    fields: np.ndarray
    energies: np.ndarray
    dipoles: np.ndarray
    j_max: int

    def curve(self, j):
        return self.dipoles[:, j]


def _track(fields, j_max, refine_depth=6):
    e0, v0 = _diagonalize(fields[0], j_max)
    prev = v0
    out_f, out_e, out_v = [fields[0]], [e0], [v0]

    def step(f_next, prev):
        e, v = _diagonalize(f_next, j_max)
        ov = np.abs(prev.T @ v)
        order = np.argmax(ov, axis=1)
        best = ov[np.arange(len(order)), order]
        ambiguous = np.unique(order).size != order.size or best.min() < REFINE_BELOW
        return e, v, order, best, ambiguous

    for f in fields[1:]:
        e, v, order, best, ambiguous = step(f, prev)
        if ambiguous:
            # walk through the interval on a finer grid
            f_lo = out_f[-1]
            ok = False
            for depth in range(1, refine_depth + 1):
                sub = np.linspace(f_lo, f, 2 ** depth + 1)[1:]
                p = prev
                ok = True
                for fs in sub:
                    e, v, order, best, ambiguous = step(fs, p)
                    if ambiguous:
                        ok = False
                        break
                    p = v[:, order]
                if ok:
                    break
            if not ok or best.min() < OVERLAP_FLOOR or np.unique(order).size != order.size:
                raise TrackingAmbiguity(
                    f"state overlap {best.min():.3f} between fields {f_lo:.4g} and {f:.4g}")
        v = v[:, order]
        e = e[order]
        # keep a continuous sign convention
        sign = np.sign(np.sum(prev * v, axis=0))
        v = v * np.where(sign == 0, 1.0, sign)
        out_f.append(f)
        out_e.append(e)
        out_v.append(v)
        prev = v
    return np.array(out_e), out_v


def stark_map(spec: RotorSpec = RotorSpec()) -> StarkMap:
    fields = np.asarray(spec.fields)
    energies, vectors = _track(fields, spec.j_max)
    dip = np.array([dipole_moments(v, spec.j_max) for v in vectors])
    return StarkMap(fields, energies, dip, spec.j_max)


def _reference(smap: StarkMap, j, field):
    # eigenvector of tracked state ``j`` at the grid point nearest ``field``
    i = int(np.argmin(np.abs(smap.fields - field)))
    e, v = _diagonalize(smap.fields[i], smap.j_max)
    return v[:, int(np.argmin(np.abs(e - smap.energies[i, j])))]


def _state_at(field, reference, j_max):
    e, v = _diagonalize(field, j_max)
    k = int(np.argmax(np.abs(v.T @ reference)))
    return e[k], v[:, k]


def _dipole_at(field, j, smap: StarkMap):
    _, v = _state_at(field, _reference(smap, j, field), smap.j_max)
    return float(dipole_moments(v[:, None], smap.j_max)[0])


def dipole_slope(smap: StarkMap, j, field, h=1e-3):
    """``d<mu_z>/dE`` of tracked state ``j`` via Hellmann-Feynman.

    ``<mu_z> = -dE/dE_dc``, so the slope is minus the second field derivative
    of the energy on a five-point stencil.
    """
    ref = _reference(smap, j, field)
    es = [_state_at(field + k * h, ref, smap.j_max)[0] for k in (-2, -1, 0, 1, 2)]
    d2 = (-es[0] + 16 * es[1] - 30 * es[2] + 16 * es[3] - es[4]) / (12 * h * h)
    return float(-d2)


@dataclass(frozen=True)
class SweetSpot:
    """Field where two tracked states carry the same induced dipole."""

    field: float
    dipole: float
    states: tuple
    slopes: tuple

    def modulation_depth(self, e_ac, state=0):
        return abs(self.slopes[state] * e_ac) / abs(self.dipole)


def find_sweet_spot(smap: StarkMap, states=(1, 2)) -> SweetSpot:
    """Crossing of the dipole curves of two tracked states.

    The first sign change of ``mu_a - mu_b`` on the grid brackets the root,
    which is then refined with Brent's method on re-diagonalized states.
    """
    a, b = states
    diff = smap.curve(a) - smap.curve(b)
    nz = np.flatnonzero(np.abs(diff) > 1e-14)
    if nz.size < 2:
        raise NoCrossing(f"dipole curves of states {states} coincide or vanish on the grid")
    sgn = np.sign(diff[nz])
    flips = np.flatnonzero(sgn[1:] != sgn[:-1])
    if flips.size == 0:
        raise NoCrossing(f"dipole curves of states {states} do not cross on the grid")
    lo, hi = smap.fields[nz[flips[0]]], smap.fields[nz[flips[0] + 1]]
    root = brentq(lambda f: _dipole_at(f, a, smap) - _dipole_at(f, b, smap), lo, hi, xtol=1e-13)
    mu = 0.5 * (_dipole_at(root, a, smap) + _dipole_at(root, b, smap))
    slopes = (dipole_slope(smap, a, root), dipole_slope(smap, b, root))
    return SweetSpot(float(root), float(mu), (a, b), slopes)


def linear_window(smap: StarkMap, sweet: SweetSpot, tolerance=LINEAR_TOLERANCE, resolution=1e-4):
    """Largest symmetric interval around the sweet spot where both dipole curves
    stay within ``tolerance`` (``mu_c``) of their tangents."""
    if tolerance <= 0:
        return (sweet.field, sweet.field)

    def deviation(h):
        worst = 0.0
        for j, slope in zip(sweet.states, sweet.slopes):
            for f in (sweet.field - h, sweet.field + h):
                mu = _dipole_at(f, j, smap)
                worst = max(worst, abs(mu - sweet.dipole - slope * (f - sweet.field)))
        return worst

    h_max = min(sweet.field - smap.fields[0], smap.fields[-1] - sweet.field)
    # step outward, then bisect the first crossing of the tolerance
    step = 0.01
    h = 0.0
    while h + step <= h_max and deviation(h + step) < tolerance:
        h += step
    lo, hi = h, min(h + step, h_max)
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if deviation(mid) < tolerance:
            lo = mid
        else:
            hi = mid
    return (sweet.field - lo, sweet.field + lo)


def modulation_depth(sweet: SweetSpot, e_ac, window=None, state=0):
    """``epsilon = |d mu/dE| E_ac / |mu_0|`` for ac amplitude ``E_ac``.

    ``window`` (from :func:`linear_window`) bounds the allowed amplitude.
    """
    if e_ac < 0:
        raise ValueError("ac amplitude must be non-negative")
    if window is not None and e_ac > 0.5 * (window[1] - window[0]) + 1e-12:
        raise OutsideLinearWindow(
            f"E_ac={e_ac:.4g} exceeds the linear half-width {0.5 * (window[1] - window[0]):.4g}")
    return sweet.modulation_depth(e_ac, state)


def ac_amplitude_for(sweet: SweetSpot, epsilon, state=0):
    """Inverse of :func:`modulation_depth`."""
    return epsilon * abs(sweet.dipole) / abs(sweet.slopes[state])
