"""Exact spin dynamics of the driven spin-phonon model without transverse field.

With ``B^x = 0`` every ``sigma^z`` configuration is conserved, so the
interaction-picture propagator factorizes into a spin-dependent phonon
displacement and an accumulated two-spin phase.  The reduced spin density
matrix follows from the displacement amplitudes ``alpha_{n,i}(t)`` and the
phases ``Phi_ij(t)``; everything here is closed form.

Time is in units of ``1/nu`` and all couplings are taken from
:class:`~dipolar_spin_sim.couplings.CouplingSet` in trap frequency units.
Spin basis: index ``k = sum_i b_i 2^i`` with ``b_i = 0`` for ``|g>``
(``s_i = +1``) and ``b_i = 1`` for ``|e>`` (``s_i = -1``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .couplings import CouplingSet
from .errors import DimensionMismatch, ResonantDrive


def spin_configurations(n):
    """``s[k, i]`` in {+1, -1} for every basis index ``k``."""
    k = np.arange(2 ** n)
    bits = (k[:, None] >> np.arange(n)[None, :]) & 1
    return 1 - 2 * bits


def zz_diagonal(couplings, n=None):
    """Diagonal of ``sum_{i<j} G_ij s_i s_j`` over the computational basis."""
    g = np.asarray(couplings, dtype=float)
    s = spin_configurations(g.shape[0]).astype(float)
    return 0.5 * np.einsum("ki,ij,kj->k", s, np.triu(g, 1) + np.triu(g, 1).T, s)


def normalized(state):
    state = np.asarray(state, dtype=complex)
    return state / np.linalg.norm(state)


def plus_state(n):
    """``(|g> + |e>)^{\\otimes n} / 2^{n/2}``."""
    return np.full(2 ** n, 2.0 ** (-n / 2), dtype=complex)


@dataclass(frozen=True)
class ThermalSpec:
    """Phonon occupation, either as a temperature ``k_B T / (hbar nu)`` or per-mode ``nbar``."""

    temperature: float = 0.0
    occupations: tuple | None = None

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")
        if self.occupations is not None and np.any(np.asarray(self.occupations) < 0):
            raise ValueError("occupations must be non-negative")

    def mean_occupation(self, frequencies):
        w = np.asarray(frequencies, dtype=float)
        if self.occupations is not None:
            nbar = np.broadcast_to(np.asarray(self.occupations, dtype=float), w.shape)
            return np.array(nbar)
        if self.temperature == 0:
            return np.zeros_like(w)
        with np.errstate(over="ignore", divide="ignore"):
            return 1.0 / np.expm1(w / self.temperature)

    def coth_factor(self, frequencies):
        """``coth(hbar w_n / 2 k_B T) = 1 + 2 nbar_n``."""
        return 1.0 + 2.0 * self.mean_occupation(frequencies)


ZERO_TEMPERATURE = ThermalSpec()


def _check_nonresonant(cs: CouplingSet, tol=1e-12):
    g = cs.spin_phonon_nu
    for n, wn in enumerate(cs.mode_frequencies):
        if np.any(g[n] != 0) and (abs(cs.omega - wn) < tol or wn == 0):
            raise ResonantDrive(f"drive resonant with mode {n}", omega=cs.omega, mode=n)


def displacement_amplitudes(cs: CouplingSet, t):
    """``alpha[..., n, i]`` at time(s) ``t``.

    ``alpha = i g/2 [(1 - e^{-i(w_n - w)t})/(w - w_n) - (1 - e^{-i(w_n + w)t})/(w + w_n)]``
    """
    _check_nonresonant(cs)
    t = np.asarray(t, dtype=float)
    w, wn = cs.omega, cs.mode_frequencies
    g = cs.spin_phonon_nu
    coupled = np.any(g != 0, axis=1)
    # uncoupled modes (centre of mass) may sit exactly at the drive frequency
    wn = np.where(coupled, wn, w + 1.0)
    tt = t[..., None]
    bracket = ((1 - np.exp(-1j * (wn - w) * tt)) / (w - wn)
               - (1 - np.exp(-1j * (wn + w) * tt)) / (w + wn))
    return 0.5j * np.where(coupled, bracket, 0.0)[..., :, None] * g


def accumulated_phases(cs: CouplingSet, t):
    """Bare and phonon-mediated two-spin phases ``(Phi0, Phi1)`` at time(s) ``t``.

    ``Phi0 = G0/2 (t + sin(2wt)/2w)`` and, per coupled mode,
    ``Phi1 = 2 g_i g_j w_n/(w^2 - w_n^2) [t/2 + sin(2wt)/4w
    + (w_n cos(wt) sin(w_n t) - w sin(wt) cos(w_n t))/(w^2 - w_n^2)]``,
    which vanishes as ``t^3`` for small ``t``.
    """
    _check_nonresonant(cs)
    t = np.asarray(t, dtype=float)
    w, wn = cs.omega, cs.mode_frequencies
    g = cs.spin_phonon_nu
    tt = t[..., None, None]
    phi0 = 0.5 * cs.bare_nu * (tt + np.sin(2 * w * tt) / (2 * w))
    ts = t[..., None]
    coupled = np.any(g != 0, axis=1)
    wc = wn[coupled]
    d = w ** 2 - wc ** 2
    time_part = (ts / 2 + np.sin(2 * w * ts) / (4 * w)
                 + (wc * np.cos(w * ts) * np.sin(wc * ts)
                    - w * np.sin(w * ts) * np.cos(wc * ts)) / d)
    weight = 2 * wc / d * time_part
    gc = g[coupled]
    phi1 = np.einsum("...n,ni,nj->...ij", weight, gc, gc)
    n = cs.n_molecules
    eye = np.eye(n, dtype=bool)
    phi0 = np.where(eye, 0.0, phi0)
    phi1 = np.where(eye, 0.0, phi1)
    return phi0, phi1


def _pair_phase(phi, s):
    # sum_{i<j} Phi_ij s_i s_j for every configuration (phi symmetric, zero diagonal)
    return 0.5 * np.einsum("ki,ij,kj->k", s, phi, s)


def decoherence_exponents(cs: CouplingSet, t, thermal: ThermalSpec = ZERO_TEMPERATURE):
    """``sum_n F_n(t, s, r)`` as a ``2^N x 2^N`` matrix."""
    alpha = displacement_amplitudes(cs, t)
    s = spin_configurations(cs.n_molecules).astype(float)
    proj = alpha @ s.T  # [n, k] = sum_i alpha_{n,i} s_i
    diff = proj[:, :, None] - proj[:, None, :]
    coth = thermal.coth_factor(cs.mode_frequencies)
    return np.einsum("n,nkl->kl", coth, np.abs(diff) ** 2)


def reduced_density(initial, cs: CouplingSet, t, thermal: ThermalSpec = ZERO_TEMPERATURE):
    """Reduced spin density matrix at time ``t`` (phonons traced out)."""
    c = np.asarray(initial, dtype=complex)
    n = cs.n_molecules
    if c.shape != (2 ** n,):
        raise DimensionMismatch(f"state has shape {c.shape}, expected {(2 ** n,)}")
    phi0, phi1 = accumulated_phases(cs, t)
    s = spin_configurations(n).astype(float)
    phase = _pair_phase(phi0 + phi1, s)
    F = decoherence_exponents(cs, t, thermal)
    rho = np.outer(c, c.conj()) * np.exp(-1j * (phase[:, None] - phase[None, :]) - 0.5 * F)
    return 0.5 * (rho + rho.conj().T)


def purity(initial, cs: CouplingSet, t, thermal: ThermalSpec = ZERO_TEMPERATURE):
    """``P_s = sum_{s,r} |C_s|^2 |C_r|^2 exp(-sum_n F_n)``."""
    p = np.abs(np.asarray(initial)) ** 2
    F = decoherence_exponents(cs, t, thermal)
    return float(p @ np.exp(-F) @ p)


def graph_fidelity(rho, target):
    """``<target| rho |target>``."""
    rho = np.asarray(rho)
    target = np.asarray(target)
    if rho.shape != (target.size, target.size):
        raise DimensionMismatch(f"rho {rho.shape} does not match target of size {target.size}")
    return float(np.real(target.conj() @ rho @ target))


def ising_phases_state(initial, couplings, t):
    """Pure state after ``exp(-i t sum_{i<j} G_ij s_i s_j)``."""
    diag = zz_diagonal(couplings)
    return np.asarray(initial, dtype=complex) * np.exp(-1j * diag * t)


def graph_time(cs: CouplingSet):
    """Gate time ``pi / (4 G_12)`` in units of ``1/nu``."""
    return np.pi / (4.0 * cs.total_nu[0, 1])


def trace_distance(rho, sigma):
    ev = np.linalg.eigvalsh(np.asarray(rho) - np.asarray(sigma))
    return 0.5 * float(np.sum(np.abs(ev)))


def time_grid(cs: CouplingSet, t_final, points_per_period=40):
    """Uniform grid resolving the drive period with at least ``points_per_period`` samples."""
    period = 2 * np.pi / cs.omega
    n = max(2, int(np.ceil(t_final / period * points_per_period)) + 1)
    return np.linspace(0.0, t_final, n)


def fidelity_trace(initial, target, cs: CouplingSet, times, thermal=ZERO_TEMPERATURE):
    return np.array([graph_fidelity(reduced_density(initial, cs, t, thermal), target) for t in times])
