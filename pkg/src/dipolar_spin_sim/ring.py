"""Coupling profiles and lattice-distortion estimates for the homogeneous ring crystal.

Frequencies are the dimensionless ``omega_tilde``; couplings are normalized so
the nearest-neighbour bare term is ``1/2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .couplings import (RING_MARGIN_FACTOR, check_detuning, ring_bare_couplings,
                        ring_margins, ring_mediated_couplings, ring_phonon_coupling)
from .crystal import CrystalSpec, Trap, ring_frequency
from .errors import ResonantDrive


@dataclass(frozen=True)
class RingProfile:
    """Total coupling ``G(d) = G0(d)/2 + G1(d)/2`` for ``d = 1 .. N//2``."""

    n_molecules: int
    omega_tilde: float
    distances: np.ndarray
    total: np.ndarray
    bare_half: np.ndarray
    mediated_half: np.ndarray


def midpoint(n_molecules, k, exact=False):
    """``(omega_tilde_k + omega_tilde_{k+1}) / 2``."""
    w = ring_frequency(n_molecules, np.array([k, k + 1]), exact)
    return float(0.5 * (w[0] + w[1]))


def debye_frequency(n_molecules=None, exact=False):
    """Largest ring frequency; ``2 sqrt(12)`` in the nearest-neighbour closed form."""
    if n_molecules is None:
        return 2.0 * np.sqrt(12.0)
    n = np.arange(n_molecules // 2 + 1)
    return float(np.max(ring_frequency(n_molecules, n, exact)))


def ring_profile(n_molecules, omega_tilde, epsilon=0.1, gamma=100.0, exact=False,
                 override_guard=False, margin_factor=RING_MARGIN_FACTOR) -> RingProfile:
    spec = CrystalSpec(n_molecules, Trap.RING, epsilon=epsilon, gamma=gamma)
    d = np.arange(1, n_molecules // 2 + 1)
    g1 = ring_mediated_couplings(spec, omega_tilde, d, exact, override_guard, margin_factor)
    g0 = 0.5 * ring_bare_couplings(n_molecules, d)
    return RingProfile(n_molecules, float(omega_tilde), d, g0 + g1, g0, g1)


def configuration_spectrum(spins):
    """``S_n = (1/N) sum_j cos(2 pi j n / N) s_j`` for ``n = 0 .. N//2``.

    ``spins`` may carry leading batch axes.
    """
    s = np.asarray(spins, dtype=float)
    N = s.shape[-1]
    n = np.arange(N // 2 + 1)
    c = np.cos(2.0 * np.pi * np.outer(np.arange(N), n) / N)
    return s @ c / N


def _sin_difference(N):
    # [j, n] -> sin(2 pi j n / N) - sin(2 pi (j-1) n / N)
    j = np.arange(N)[:, None]
    n = np.arange(1, N // 2 + 1)[None, :]
    return np.sin(2 * np.pi * j * n / N) - np.sin(2 * np.pi * (j - 1) * n / N)


@dataclass(frozen=True)
class DisplacementEstimate:
    """Relative displacement ``|dx_0 - dx_1|`` (units ``a``) per spin configuration.

    ``full`` keeps every mode exactly, ``approx`` linearizes the phase
    difference (``2 pi n / N``) and ``bound`` replaces ``|S_n|`` with
    ``1/sqrt(N)`` and adds magnitudes.
    """

    n_molecules: int
    epsilon: float
    omega_tilde: float
    configurations: np.ndarray
    full: np.ndarray
    approx: np.ndarray
    spectra: np.ndarray
    bound: float
    seed: int | None = None

    @property
    def bound_coefficient(self):
        """``bound / (epsilon sqrt(N))``."""
        return self.bound / (self.epsilon * np.sqrt(self.n_molecules))


def _mode_weights(N, epsilon, omega_tilde, exact):
    n = np.arange(1, N // 2 + 1)
    w = ring_frequency(N, n, exact)
    gt = ring_phonon_coupling(N, n, exact)
    det = w - omega_tilde
    coupled = np.abs(gt) > 1e-12
    if np.any(coupled & (np.abs(det) < 1e-12)):
        k = int(n[coupled & (np.abs(det) < 1e-12)][0])
        raise ResonantDrive(f"drive resonant with ring mode {k}", omega=omega_tilde, mode=k)
    with np.errstate(divide="ignore", invalid="ignore"):
        weight = np.where(coupled, epsilon / w * gt / det, 0.0)
    return n, weight


def _configurations(N, config, samples, rng):
    if isinstance(config, str):
        key = config.lower()
        if key == "fm":
            return np.ones((1, N))
        if key == "afm":
            if N % 2:
                raise ValueError("an alternating configuration on a ring needs even N")
            return np.array([(-1.0) ** np.arange(N)])
        if key == "random":
            return rng.choice([-1.0, 1.0], size=(samples, N))
        raise ValueError(f"unknown configuration {config!r}")
    s = np.atleast_2d(np.asarray(config, dtype=float))
    if s.shape[-1] != N or not np.all(np.abs(s) == 1):
        raise ValueError(f"spin configuration must be +-1 entries of length {N}")
    return s


def displacement_bound(n_molecules, epsilon, omega_tilde, config="random", samples=200, seed=0,
                       exact=False, gamma=100.0, override_guard=False,
                       margin_factor=RING_MARGIN_FACTOR) -> DisplacementEstimate:
    """Spin-dependent relative displacement of two neighbouring molecules."""
    N = n_molecules
    if not override_guard:
        spec = CrystalSpec(N, Trap.RING, epsilon=epsilon, gamma=gamma)
        w, m = ring_margins(spec, exact, margin_factor)
        check_detuning(omega_tilde, w, m)
    n, weight = _mode_weights(N, epsilon, omega_tilde, exact)
    rng = np.random.default_rng(seed)
    s = _configurations(N, config, samples, rng)
    spectra = configuration_spectrum(s)
    approx = np.abs(spectra[:, 1:] @ (weight * 2 * np.pi * n / N))
    full = np.abs((s @ _sin_difference(N)) @ weight / N)
    bound = float(np.sum(np.abs(weight) * 2 * np.pi * n / N) / np.sqrt(N))
    return DisplacementEstimate(N, epsilon, float(omega_tilde), s, full, approx, spectra, bound,
                                seed if isinstance(config, str) and config.lower() == "random" else None)
