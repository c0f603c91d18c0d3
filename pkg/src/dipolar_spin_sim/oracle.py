"""Brute-force integration of the full spin-phonon Hamiltonian on a truncated Fock space.

Interaction picture with respect to the phonons, time in units ``1/nu``::

    H(t) = sum_{i<j} G0_ij s_i s_j cos^2(wt)
         + sum_{n,i} g_{n,i} cos(wt) s_i (a_n e^{-i w_n t} + a_n^dag e^{i w_n t})

The Hamiltonian is applied matrix-free to amplitude arrays of shape
``(2^N, d, ..., d[, batch])`` with ``d = n_max + 1``; the spin index is the
leading (major) axis and mode occupations follow lexicographically.  This module
never touches the closed-form propagator and serves as the independent check of
:mod:`dipolar_spin_sim.dynamics`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .couplings import CouplingSet
from .dynamics import ThermalSpec, spin_configurations, zz_diagonal
from .errors import StepFailure, TruncationLeak

DEFAULT_NMAX = 5
LEAK_TOL = 1e-6
NORM_TOL = 1e-8


@dataclass(frozen=True)
class HamiltonianTerms:
    """Switches for the terms assembled into the full Hamiltonian.

    ``single_spin`` re-enables the dropped ``h_i cos(wt) sigma^z_i`` term;
    ``average_bare`` replaces ``cos^2(wt)`` in the bare coupling by its mean 1/2.
    """

    single_spin: bool = False
    average_bare: bool = False
    phonon_coupling: bool = True


DEFAULT_TERMS = HamiltonianTerms()


def residual_terms_toggle(single_spin=False, average_bare=False, phonon_coupling=True):
    return HamiltonianTerms(single_spin, average_bare, phonon_coupling)


@dataclass
class FullState:
    """Amplitudes over spins (x) truncated phonon modes."""

    amplitudes: np.ndarray
    n_spins: int
    n_max: int
    n_modes: int

    @classmethod
    def product(cls, spin_state, occupations, n_max):
        spin_state = np.asarray(spin_state, dtype=complex)
        n_spins = int(round(np.log2(spin_state.size)))
        occupations = tuple(int(k) for k in occupations)
        d = n_max + 1
        if any(k > n_max for k in occupations):
            raise TruncationLeak(f"occupation {max(occupations)} exceeds n_max={n_max}")
        ph = np.zeros((d,) * len(occupations), dtype=complex)
        ph[occupations] = 1.0
        amp = np.multiply.outer(spin_state, ph)
        return cls(amp, n_spins, n_max, len(occupations))

    @classmethod
    def vacuum(cls, spin_state, n_modes, n_max=DEFAULT_NMAX):
        return cls.product(spin_state, (0,) * n_modes, n_max)

    def norm(self):
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2)))

    def reduced_spin_density(self):
        a = self.amplitudes.reshape(2 ** self.n_spins, -1)
        return a @ a.conj().T

    def top_level_population(self):
        p = np.abs(self.amplitudes) ** 2
        worst = 0.0
        for m in range(self.n_modes):
            idx = [slice(None)] * p.ndim
            idx[1 + m] = self.n_max
            worst = max(worst, float(p[tuple(idx)].sum()))
        return worst


@dataclass(frozen=True)
class IntegrationReport:
    final: FullState
    max_leakage: float
    steps: int
    norm_drift: float
    times: np.ndarray | None = None
    spin_densities: np.ndarray | None = None


class _FullHamiltonian:
    def __init__(self, cs: CouplingSet, mode_index, n_max, terms: HamiltonianTerms, batch=False):
        n = cs.n_molecules
        self.shape_spin = 2 ** n
        self.n_modes = len(mode_index)
        self.d = n_max + 1
        self.w = cs.omega
        self.wn = np.asarray(cs.mode_frequencies)[mode_index]
        s = spin_configurations(n).astype(float)
        # projection of the spin configuration onto every coupled mode: [k, m]
        self.gs = s @ cs.spin_phonon_nu[mode_index].T if terms.phonon_coupling else np.zeros((2 ** n, self.n_modes))
        self.zz = zz_diagonal(cs.bare_nu)
        self.h1 = s @ cs.single_spin_nu if terms.single_spin else None
        self.average_bare = terms.average_bare
        self.batch = batch
        k = np.arange(1, self.d)
        self.sqrt_k = np.sqrt(k)
        self.full_shape = (self.shape_spin,) + (self.d,) * self.n_modes

    def _expand(self, v, extra):
        # broadcast a per-spin vector over the phonon (and batch) axes
        return v.reshape((-1,) + (1,) * extra)

    def apply(self, t, psi):
        extra = psi.ndim - 1
        c = np.cos(self.w * t)
        bare = 0.5 if self.average_bare else c * c
        out = self._expand(self.zz * bare, extra) * psi
        if self.h1 is not None:
            out = out + self._expand(self.h1 * c, extra) * psi
        for m in range(self.n_modes):
            if not np.any(self.gs[:, m]):
                continue
            ax = 1 + m
            shape = [1] * psi.ndim
            shape[ax] = self.d - 1
            sk = self.sqrt_k.reshape(shape)
            phase = np.exp(-1j * self.wn[m] * t)
            tmp = np.zeros_like(psi)
            lo = [slice(None)] * psi.ndim
            hi = [slice(None)] * psi.ndim
            lo[ax] = slice(0, self.d - 1)
            hi[ax] = slice(1, self.d)
            # a |k> = sqrt(k) |k-1>,  a^dag |k> = sqrt(k+1) |k+1>
            tmp[tuple(lo)] += phase * sk * psi[tuple(hi)]
            tmp[tuple(hi)] += np.conj(phase) * sk * psi[tuple(lo)]
            out = out + self._expand(self.gs[:, m] * c, extra) * tmp
        return -1j * out


def coupled_modes(cs: CouplingSet):
    """Indices of modes with non-zero spin coupling; the others factor out exactly."""
    return np.flatnonzero(np.any(cs.spin_phonon_nu != 0, axis=1))


def _integrate(ham, y0, t_final, t_eval, rtol, atol, max_step):
    shape = y0.shape

    def rhs(t, y):
        return ham.apply(t, y.reshape(shape)).ravel()

    sol = solve_ivp(rhs, (0.0, t_final), y0.ravel(), method="DOP853", t_eval=t_eval,
                    rtol=rtol, atol=atol, max_step=max_step)
    if not sol.success:
        raise StepFailure(sol.message)
    return sol


def evolve_full(initial: FullState, cs: CouplingSet, t_final, n_max=None, rtol=1e-10, atol=1e-12,
                max_step=np.inf, times=None, terms: HamiltonianTerms = DEFAULT_TERMS,
                leak_tol=LEAK_TOL, mode_index=None):
    """Propagate a spin-phonon state to ``t_final``.

    ``times`` optionally requests reduced spin densities along the way.  Only
    coupled modes are carried unless ``mode_index`` says otherwise; the number
    of modes of ``initial`` must match.
    """
    n_max = initial.n_max if n_max is None else n_max
    if n_max < 3:
        raise ValueError("n_max must be at least 3")
    mode_index = coupled_modes(cs) if mode_index is None else np.asarray(mode_index)
    if initial.n_modes != len(mode_index):
        raise ValueError(f"initial state carries {initial.n_modes} modes, Hamiltonian {len(mode_index)}")
    ham = _FullHamiltonian(cs, mode_index, n_max, terms)
    t_eval = None
    if times is not None:
        t_eval = np.union1d(np.asarray(times, dtype=float), [t_final])
    sol = _integrate(ham, initial.amplitudes, t_final, t_eval, rtol, atol, max_step)
    states = sol.y.T.reshape((-1,) + initial.amplitudes.shape)
    snapshots = [FullState(a, initial.n_spins, n_max, initial.n_modes) for a in states]
    leak = max(s.top_level_population() for s in snapshots)
    final = snapshots[-1]
    drift = abs(final.norm() - initial.norm())
    if leak > leak_tol:
        raise TruncationLeak(f"top Fock level population {leak:.2e} exceeds {leak_tol:.0e}", leak)
    rhos = None
    if times is not None:
        rhos = np.array([s.reduced_spin_density() for s in snapshots])
    return IntegrationReport(final, leak, int(sol.nfev), drift, sol.t if times is not None else None, rhos)


@dataclass(frozen=True)
class ThermalEnsemble:
    occupations: list
    weights: np.ndarray
    tail: float


def thermal_initial(thermal: ThermalSpec, frequencies, n_max, tail_tol=1e-2, headroom=2):
    """Bose-weighted Fock product states for the given modes.

    Each mode is truncated at ``n_max - headroom`` so the initial state leaves
    room for displacement; the discarded tail weight is reported and the weights
    sum to ``1 - tail``.
    """
    nbar = thermal.mean_occupation(frequencies)
    if np.any(nbar > n_max / 4):
        raise TruncationLeak(f"mean occupation {nbar.max():.2f} too large for n_max={n_max}")
    cut = n_max - headroom
    per_mode = []
    for nb in nbar:
        k = np.arange(cut + 1)
        per_mode.append(nb ** k / (1 + nb) ** (k + 1) if nb > 0 else (k == 0).astype(float))
    occs, weights = [], []
    for combo in itertools.product(range(cut + 1), repeat=len(nbar)):
        w = float(np.prod([per_mode[m][c] for m, c in enumerate(combo)]))
        if w > 0:
            occs.append(combo)
            weights.append(w)
    weights = np.array(weights)
    tail = 1.0 - weights.sum()
    if tail > tail_tol:
        raise TruncationLeak(f"thermal tail {tail:.2e} exceeds {tail_tol:.0e}; raise n_max", tail)
    return ThermalEnsemble(occs, weights, float(tail))


def thermal_reduced_density(spin_state, cs: CouplingSet, t_final, thermal: ThermalSpec, n_max,
                            tail_tol=1e-2, rtol=1e-9, atol=1e-11, terms=DEFAULT_TERMS):
    """Exact mixed-state evolution of ``|psi><psi| (x) rho_thermal``, phonons traced out.

    All Fock components of the (truncated) thermal state are propagated together
    as a batch; the result is normalized by the retained weight.
    """
    modes = coupled_modes(cs)
    freqs = np.asarray(cs.mode_frequencies)
    # occupations may be given for every mode; keep those of the carried ones
    carried = ThermalSpec(occupations=tuple(thermal.mean_occupation(freqs)[modes]))
    ens = thermal_initial(carried, freqs[modes], n_max, tail_tol)
    spin_state = np.asarray(spin_state, dtype=complex)
    batch = []
    for occ in ens.occupations:
        batch.append(FullState.product(spin_state, occ, n_max).amplitudes)
    y0 = np.stack(batch, axis=-1)
    ham = _FullHamiltonian(cs, modes, n_max, terms)
    sol = _integrate(ham, y0, t_final, None, rtol, atol, np.inf)
    yf = sol.y[:, -1].reshape(y0.shape)
    d = n_max + 1
    leak = 0.0
    for m in range(len(modes)):
        idx = [slice(None)] * yf.ndim
        idx[1 + m] = d - 1
        top = np.abs(yf[tuple(idx)]) ** 2
        # top-level population averaged over the thermal ensemble
        leak = max(leak, float(top.reshape(-1, len(ens.weights)).sum(axis=0) @ ens.weights))
    if leak > LEAK_TOL * 100:
        raise TruncationLeak(f"thermal propagation leaked {leak:.2e}", leak)
    a = yf.reshape(2 ** cs.n_molecules, -1, len(ens.weights))
    rho = np.einsum("kpb,lpb,b->kl", a, a.conj(), ens.weights)
    return rho / ens.weights.sum(), ens
