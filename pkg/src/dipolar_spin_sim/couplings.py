"""Bare, spin-phonon and phonon-mediated Ising couplings.

Normalized quantities (``Gbar``) are in units of ``D eps^2 / (hbar a^3)``; the
normalized spin-phonon coupling ``gbar`` is defined so that

    Gbar1_ij = sum_n gbar_{n,i} gbar_{n,j} / (w^2 - w_n^2)

with frequencies in trap units.  :class:`CouplingSet` also exposes the same
couplings in angular-frequency units of the trap (``*_nu`` properties), which is
what the time-domain modules integrate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .crystal import (CrystalSpec, EquilibriumConfig, PhononSpectrum, Trap, phonon_modes,
                      ring_frequency, solve_equilibrium)
from .errors import ResonantDrive

DEFAULT_MARGIN_FACTOR = 10.0
# ring guard: the factor-10 band would forbid the upper-band profile points
RING_MARGIN_FACTOR = 1.0


@dataclass(frozen=True)
class DriveSpec:
    """Dipole modulation: frequency plus the guard used against resonant driving."""

    omega: float
    epsilon: float = 0.1
    dipole_frequency: float = 0.5
    margin_factor: float = DEFAULT_MARGIN_FACTOR
    override_guard: bool = False

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError(f"modulation frequency must be positive, got {self.omega}")

    @classmethod
    def for_crystal(cls, spec: CrystalSpec, omega, **kw):
        return cls(omega=omega, epsilon=spec.epsilon, dipole_frequency=spec.dipole_frequency, **kw)


def bare_couplings(eq: EquilibriumConfig):
    """``Gbar0_ij = 1 / |x_i - x_j|^3`` (zero diagonal)."""
    x = np.asarray(eq.positions, dtype=float)
    dist = np.abs(x[:, None] - x[None, :])
    np.fill_diagonal(dist, np.inf)
    return 1.0 / dist ** 3


def spin_phonon_couplings(eq: EquilibriumConfig, spectrum: PhononSpectrum):
    """Normalized spin-phonon couplings ``gbar[n, i]``.

    ``gbar_{n,i} = -(3 / xi^(5/2)) sum_j (x_i - x_j)/|x_i - x_j|^5 (c_{n,i} - c_{n,j})``
    """
    if eq.n_molecules == 1:
        return np.zeros((1, 1))
    x = eq.positions
    d = x[:, None] - x[None, :]
    dist = np.abs(d)
    np.fill_diagonal(dist, np.inf)
    force = d / dist ** 5
    c = spectrum.modes
    diff = c[:, :, None] - c[:, None, :]
    g = -3.0 / eq.xi ** 2.5 * np.einsum("ij,nij->ni", force, diff)
    # the centre-of-mass row vanishes identically; remove rounding noise
    com = np.all(np.abs(c - c[:, :1]) < 1e-8, axis=1)
    g[com] = 0.0
    return g


def frequency_couplings(g_sp, spectrum: PhononSpectrum, epsilon, dipole_frequency):
    """Spin-phonon couplings in trap angular-frequency units.

    ``g_{n,i} = eps * gbar_{n,i} * sqrt(kappa / (2 w_n))`` with
    ``kappa = D/(hbar a^3 nu)``.
    """
    w = np.asarray(spectrum.frequencies, dtype=float)
    scale = np.zeros_like(w)
    pos = w > 0
    scale[pos] = np.sqrt(dipole_frequency / (2.0 * w[pos]))
    return epsilon * np.asarray(g_sp) * scale[:, None]


def detuning_margins(g_sp, spectrum, epsilon, dipole_frequency, margin_factor=DEFAULT_MARGIN_FACTOR):
    """Forbidden half-width around each mode: ``factor * max_i |g_{n,i}| / 2``."""
    g = frequency_couplings(g_sp, spectrum, epsilon, dipole_frequency)
    return margin_factor * np.max(np.abs(g), axis=1) / 2.0


def check_detuning(omega, frequencies, margins):
    for n, (wn, m) in enumerate(zip(frequencies, margins)):
        if m > 0 and abs(omega - wn) < m:
            raise ResonantDrive(
                f"omega={omega:.6g} within {m:.3g} of mode {n} at {wn:.6g}", omega=omega, mode=n)


def mediated_couplings(g_sp, spectrum: PhononSpectrum, drive: DriveSpec):
    """Phonon-mediated coupling ``Gbar1`` at modulation frequency ``drive.omega``."""
    g_sp = np.asarray(g_sp, dtype=float)
    w = spectrum.frequencies
    if not drive.override_guard:
        margins = detuning_margins(g_sp, spectrum, drive.epsilon, drive.dipole_frequency,
                                   drive.margin_factor)
        check_detuning(drive.omega, w, margins)
    coupled = np.any(g_sp != 0.0, axis=1)
    denom = drive.omega ** 2 - w[coupled] ** 2
    gc = g_sp[coupled]
    g1 = np.einsum("ni,nj,n->ij", gc, gc, 1.0 / denom)
    np.fill_diagonal(g1, 0.0)
    return 0.5 * (g1 + g1.T)


def total_couplings(bare, mediated):
    """Total Ising coupling ``(Gbar0 + Gbar1) / 2`` and its rms over pairs."""
    g = 0.5 * (np.asarray(bare) + np.asarray(mediated))
    np.fill_diagonal(g, 0.0)
    return g, rms_coupling(g)


def rms_coupling(g):
    iu = np.triu_indices(len(g), k=1)
    if iu[0].size == 0:
        return 0.0
    return float(np.sqrt(np.mean(np.asarray(g)[iu] ** 2)))


def valid_regions(g_sp, spectrum: PhononSpectrum, epsilon, dipole_frequency=0.5,
                  margin_factor=DEFAULT_MARGIN_FACTOR):
    """Allowed modulation-frequency intervals ``[(lo, hi), ...]``.

    Every coupled mode ``n`` excludes ``|w - w_n| < margin_n``; uncoupled modes
    (centre of mass) exclude nothing.  The last interval is open to ``inf``.
    """
    margins = detuning_margins(g_sp, spectrum, epsilon, dipole_frequency, margin_factor)
    bands = sorted((wn - m, wn + m) for wn, m in zip(spectrum.frequencies, margins) if m > 0)
    merged = []
    for lo, hi in bands:
        if merged and lo <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], hi)
        else:
            merged.append([lo, hi])
    regions, start = [], 0.0
    for lo, hi in merged:
        if lo > start:
            regions.append((start, lo))
        start = max(start, hi)
    regions.append((start, np.inf))
    return regions


def in_valid_region(omega, regions):
    return any(lo < omega < hi for lo, hi in regions)


@dataclass(frozen=True)
class CouplingSet:
    """All couplings of a harmonic-trap crystal at one modulation frequency."""

    g_bare: np.ndarray
    g_spin_phonon: np.ndarray
    g_mediated: np.ndarray
    g_total: np.ndarray
    g_rms: float
    omega: float
    mode_frequencies: np.ndarray
    epsilon: float
    dipole_frequency: float

    @property
    def scale(self):
        """Conversion from normalized couplings to trap angular-frequency units."""
        return self.dipole_frequency * self.epsilon ** 2

    @property
    def n_molecules(self):
        return self.g_bare.shape[0]

    @property
    def bare_nu(self):
        return self.scale * self.g_bare

    @property
    def total_nu(self):
        return self.scale * self.g_total

    @property
    def spin_phonon_nu(self):
        w = self.mode_frequencies
        scale = np.zeros_like(w)
        scale[w > 0] = np.sqrt(self.dipole_frequency / (2.0 * w[w > 0]))
        return self.epsilon * self.g_spin_phonon * scale[:, None]

    @property
    def single_spin_nu(self):
        """Amplitude of the dropped single-spin term ``cos(wt) sigma^z_i`` per molecule."""
        return self.dipole_frequency * self.epsilon * self.g_bare.sum(axis=1)

    def with_epsilon(self, epsilon):
        return CouplingSet(self.g_bare, self.g_spin_phonon, self.g_mediated, self.g_total,
                           self.g_rms, self.omega, self.mode_frequencies, epsilon,
                           self.dipole_frequency)


@dataclass(frozen=True)
class HarmonicCrystal:
    """Cached equilibrium, spectrum and ``gbar`` for repeated frequency scans."""

    spec: CrystalSpec
    equilibrium: EquilibriumConfig
    spectrum: PhononSpectrum
    g_bare: np.ndarray
    g_spin_phonon: np.ndarray

    @classmethod
    def build(cls, spec: CrystalSpec):
        if spec.trap is not Trap.HARMONIC:
            raise ValueError("HarmonicCrystal needs a harmonic trap")
        eq = solve_equilibrium(spec)
        sp = phonon_modes(spec, eq)
        return cls(spec, eq, sp, bare_couplings(eq), spin_phonon_couplings(eq, sp))

    def drive(self, omega, **kw):
        return DriveSpec.for_crystal(self.spec, omega, **kw)

    def valid_regions(self, margin_factor=DEFAULT_MARGIN_FACTOR):
        return valid_regions(self.g_spin_phonon, self.spectrum, self.spec.epsilon,
                             self.spec.dipole_frequency, margin_factor)

    def couplings(self, omega, override_guard=False, margin_factor=DEFAULT_MARGIN_FACTOR):
        drive = self.drive(omega, override_guard=override_guard, margin_factor=margin_factor)
        g1 = mediated_couplings(self.g_spin_phonon, self.spectrum, drive)
        g, rms = total_couplings(self.g_bare, g1)
        return CouplingSet(self.g_bare, self.g_spin_phonon, g1, g, rms, float(omega),
                           self.spectrum.frequencies, self.spec.epsilon,
                           self.spec.dipole_frequency)


def harmonic_couplings(n_molecules, omega, epsilon=0.1, dipole_frequency=0.5, override_guard=False):
    spec = CrystalSpec(n_molecules, Trap.HARMONIC, epsilon=epsilon, dipole_frequency=dipole_frequency)
    return HarmonicCrystal.build(spec).couplings(omega, override_guard=override_guard)


# -- ring crystal -----------------------------------------------------------

def ring_distance(n_molecules, i, j):
    d = abs(int(i) - int(j)) % n_molecules
    return min(d, n_molecules - d)


def ring_phonon_coupling(n_molecules, n, exact=False):
    """Dimensionless ring spin-phonon amplitude ``g_tilde_n``.

    Closed form ``6 sin(2 pi n / N)`` from nearest neighbours, or the
    minimum-image sum over all neighbours.
    """
    n = np.asarray(n)
    if not exact:
        return 6.0 * np.sin(2.0 * np.pi * n / n_molecules)
    N = n_molecules
    lag = np.arange(1, (N - 1) // 2 + 1)
    theta = 2.0 * np.pi * np.multiply.outer(n, lag) / N
    return np.sum(6.0 * np.sin(theta) / lag.astype(float) ** 4, axis=-1)


def _ring_modes(spec, exact):
    N = spec.n_molecules
    n = np.arange(1, N // 2 + 1)
    return n, ring_frequency(N, n, exact), ring_phonon_coupling(N, n, exact)


def ring_margins(spec: CrystalSpec, exact=False, margin_factor=RING_MARGIN_FACTOR):
    """Forbidden half-widths (``omega_tilde`` units) around the positive ring modes."""
    N = spec.n_molecules
    _, w, gt = _ring_modes(spec, exact)
    # |gbar| converted to omega_tilde units: eps g_tilde gamma^(1/4) / sqrt(2 N w_tilde)
    g = spec.epsilon * np.abs(gt) * spec.gamma ** 0.25 / np.sqrt(2.0 * N * w)
    return w, margin_factor * g / 2.0


def ring_mediated_couplings(spec: CrystalSpec, omega_tilde, distance, exact=False,
                            override_guard=False, margin_factor=RING_MARGIN_FACTOR):
    """Half the phonon-mediated ring coupling, ``Gbar1_ij / 2``, at separation ``distance``.

    ``sum_{n>0} g_n^2 cos(2 pi d n / N) / (N (w^2 - w_n^2))``; independent of gamma.
    """
    if spec.trap is not Trap.RING:
        raise ValueError("ring_mediated_couplings requires a ring crystal")
    N = spec.n_molecules
    if not override_guard:
        w, m = ring_margins(spec, exact, margin_factor)
        check_detuning(omega_tilde, w, m)
    n, w, gt = _ring_modes(spec, exact)
    d = np.asarray(distance)
    phase = np.cos(2.0 * np.pi * np.multiply.outer(d, n) / N)
    return np.sum(gt ** 2 * phase / (N * (omega_tilde ** 2 - w ** 2)), axis=-1)


def ring_bare_couplings(n_molecules, distance):
    """``Gbar0`` at minimum-image separation (``1/d^3``)."""
    d = np.asarray(distance, dtype=float)
    d = np.minimum(d % n_molecules, n_molecules - d % n_molecules)
    return 1.0 / d ** 3


def ring_coupling_matrix(spec: CrystalSpec, omega_tilde, exact=False, override_guard=False,
                         margin_factor=RING_MARGIN_FACTOR):
    """Total ring Ising couplings ``Gbar_ij = (Gbar0 + Gbar1)/2`` as an ``N x N`` matrix."""
    N = spec.n_molecules
    d = np.arange(N)
    half_g1 = ring_mediated_couplings(spec, omega_tilde, d, exact, override_guard, margin_factor)
    prof = np.zeros(N)
    prof[1:] = 0.5 * ring_bare_couplings(N, d[1:]) + half_g1[1:]
    idx = (d[None, :] - d[:, None]) % N
    return prof[idx]
