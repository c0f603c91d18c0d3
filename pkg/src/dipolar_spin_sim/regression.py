"""Regression suite: each numbered criterion produces a list of checks with
expected value, observed value, tolerance and verdict."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .couplings import HarmonicCrystal, ring_mediated_couplings
from .crystal import CrystalSpec, Trap, phonon_modes, solve_equilibrium
from .dynamics import (graph_fidelity, graph_time, plus_state, purity, reduced_density,
                       trace_distance)
from .oracle import FullState, coupled_modes, evolve_full
from .ring import debye_frequency, displacement_bound, midpoint, ring_profile
from .rotor import (RotorSpec, _diagonalize, ac_amplitude_for, dipole_moments, find_sweet_spot,
                    linear_window, stark_map)
from .spinmodel import (IsingSpec, NamedState, OrderLabel, adiabatic_sweep, classical_minimum,
                        classify_order, ground_state, gaussian_schedule)

# Reference values and tolerances; keys are referenced by the individual checks.
TOLERANCES = {
    "xi2": 1e-10,
    "xi3": 0.01,
    "equal_pairwise": 0.005,
    "equal_value": 0.01,
    "sign_change": 0.02,
    "region_boundary": 0.02,
    "fidelity": 0.01,
    "closed_vs_oracle": 1e-3,
    "purity_r2": 0.99,
    "split_location": 0.01,
    "afms_overlap": 0.95,
    "afma_overlap": 0.95,
    "ghz_overlap": 0.9,
    "w_overlap": 0.9,
    "debye": 0.002,
    "gamma_independence": 1e-12,
    "far_detuned": 0.05,
    "exact_zero": 1e-12,
    "sqrt_scaling": 0.30,
    "sweet_field": 0.02,
    "sweet_dipole": 0.01,
    "linear_tolerance": 0.005,
    "orthonormality": 1e-10,
    "com_decoupling": 1e-12,
    "population_conservation": 1e-8,
    "hellmann_feynman": 1e-6,
    "oracle_convergence": 1e-6,
    "classical_ground": 1e-10,
}


@dataclass(frozen=True)
class Check:
    label: str
    expected: str
    observed: str
    tolerance: str
    passed: bool


@dataclass
class Criterion:
    number: int
    name: str
    checks: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self):
        return bool(self.checks) and all(c.passed for c in self.checks)

    def line(self):
        verdict = "PASS" if self.passed else "FAIL"
        detail = "; ".join(f"{c.label}: {c.observed} (expected {c.expected}, tol {c.tolerance})"
                           + ("" if c.passed else " FAIL") for c in self.checks)
        return f"[{verdict}] criterion {self.number} {self.name}: {detail}"


def _close(label, observed, expected, tol, relative=False, fmt=".6g"):
    err = abs(observed - expected) / (abs(expected) if relative else 1.0)
    kind = f"{tol:g} rel" if relative else f"{tol:g}"
    return Check(label, f"{expected:{fmt}}", f"{observed:{fmt}}", kind, bool(err <= tol))


def _at_least(label, observed, threshold, fmt=".6g"):
    return Check(label, f">= {threshold:g}", f"{observed:{fmt}}", "-", bool(observed >= threshold))


def _below(label, observed, limit, fmt=".3g"):
    return Check(label, f"<= {limit:g}", f"{observed:{fmt}}", "-", bool(observed <= limit))


def _crystal(n=3, epsilon=0.1):
    return HarmonicCrystal.build(CrystalSpec(n, Trap.HARMONIC, epsilon=epsilon))


def lattice_constants(tol, seed=0):
    xi2 = solve_equilibrium(CrystalSpec(2)).xi
    xi3 = solve_equilibrium(CrystalSpec(3)).xi
    return [_close("xi_2", xi2, 6 ** 0.2, tol["xi2"], fmt=".12g"),
            _close("xi_3", xi3, 1.26, tol["xi3"])]


def equal_coupling_point(tol, seed=0):
    cs = _crystal().couplings(2.977)
    g = [cs.g_total[0, 1], cs.g_total[0, 2], cs.g_total[1, 2]]
    spread = (max(g) - min(g)) / np.mean(g)
    checks = [_below("pairwise spread", spread, tol["equal_pairwise"])]
    checks += [_close(f"G_{p}", v, 0.911, tol["equal_value"], relative=True)
               for p, v in zip(("12", "13", "23"), g)]
    return checks


def _coupling_root(crystal, pair, lo=0.5, hi=1.8):
    i, j = pair

    def f(w):
        return crystal.couplings(w, override_guard=True).g_total[i, j]

    grid = np.linspace(lo, hi, 131)
    vals = np.array([f(w) for w in grid])
    k = np.flatnonzero(np.sign(vals[1:]) != np.sign(vals[:-1]))
    if k.size == 0:
        return float("nan")
    return brentq(f, grid[k[0]], grid[k[0] + 1], xtol=1e-12)


def sign_change(tol, seed=0):
    c = _crystal()
    return [_close("G_12 root", _coupling_root(c, (0, 1)), 1.35, tol["sign_change"], relative=True),
            _close("G_13 root", _coupling_root(c, (0, 2)), 1.35, tol["sign_change"], relative=True)]


def region_boundaries(tol, seed=0):
    regions = _crystal().valid_regions()
    edges = [b for r in regions for b in r if 0 < b < np.inf]
    expected = [1.84, 2.63, 3.23, 3.78]
    if len(edges) != len(expected):
        return [Check("boundary count", str(len(expected)), str(len(edges)), "exact", False)]
    return [_close(f"boundary {k + 1}", e, x, tol["region_boundary"], relative=True)
            for k, (e, x) in enumerate(zip(edges, expected))]


def graph_fidelity_check(tol, seed=0, n_max=5):
    cs = _crystal().couplings(2.977)
    t = graph_time(cs)
    psi = plus_state(3)
    target = NamedState.GRAPH3.vector()
    modes = coupled_modes(cs)
    rep = evolve_full(FullState.vacuum(psi, len(modes), n_max), cs, t)
    rho_oracle = rep.final.reduced_spin_density()
    rho_closed = reduced_density(psi, cs, t)
    f_oracle = graph_fidelity(rho_oracle, target)
    f_closed = graph_fidelity(rho_closed, target)
    return [_close("oracle fidelity", f_oracle, 0.965, tol["fidelity"]),
            _below("|F_closed - F_oracle|", abs(f_closed - f_oracle), tol["closed_vs_oracle"]),
            _below("trace distance", trace_distance(rho_closed, rho_oracle), tol["closed_vs_oracle"])]


def purity_curve(epsilons, omega=2.977):
    """``1 - P_s`` at the graph time for each modulation depth."""
    base = _crystal().couplings(omega)
    out = []
    for e in epsilons:
        cs = base.with_epsilon(e)
        out.append(1.0 - purity(plus_state(3), cs, graph_time(cs)))
    return np.array(out)


def quadratic_fit(x, y):
    """Least-squares ``y = c x`` through the origin; returns ``(c, R^2)``."""
    c = float(np.dot(x, y) / np.dot(x, x))
    res = y - c * x
    return c, float(1.0 - np.sum(res ** 2) / np.sum((y - np.mean(y)) ** 2))


def binned_purity_fit(lo=0.02, hi=0.1, points=401, bins=8):
    """Bin-averaged ``1 - P_s`` against ``epsilon^2``.

    The raw curve oscillates with the phonon rephasing; averaging over
    equal-width bins in ``epsilon`` removes the oscillation and leaves the
    envelope.
    """
    eps = np.linspace(lo, hi, points)
    y = purity_curve(eps)
    idx = np.clip(np.digitize(eps, np.linspace(lo, hi, bins + 1)) - 1, 0, bins - 1)
    xb = np.array([np.mean(eps[idx == k] ** 2) for k in range(bins)])
    yb = np.array([np.mean(y[idx == k]) for k in range(bins)])
    return quadratic_fit(xb, yb), quadratic_fit(eps ** 2, y)


def purity_scaling(tol, seed=0):
    (c, r2), (_, r2_raw) = binned_purity_fit()
    return [_at_least("R^2 of c*eps^2 (binned)", r2, tol["purity_r2"], fmt=".5f"),
            Check("c", "-", f"{c:.4g}", "-", c > 0),
            Check("R^2 unbinned (info)", "-", f"{r2_raw:.3f}", "-", True)]


PHASE_POINTS = {
    "Ia": ((0.3, 1.0, 1.3), OrderLabel.AFMS),
    "Ib": ((1.4, 1.6, 1.8), OrderLabel.FM),
    "II low": ((2.7, 2.9), OrderLabel.AFMS),
    "II high": ((3.0, 3.2), OrderLabel.AFMA),
    "III": ((3.9, 4.5, 8.0), OrderLabel.AFMS),
}


def _label(crystal, omega, ratio):
    cs = crystal.couplings(omega)
    gs = ground_state(IsingSpec(cs.g_total, ratio * cs.g_rms))
    return classify_order(gs.state, gs.degeneracy).label


def phase_labels(tol, seed=0, ratio=0.05):
    c = _crystal()
    checks = []
    for region, (omegas, want) in PHASE_POINTS.items():
        got = [_label(c, w, ratio) for w in omegas]
        checks.append(Check(region, want.value, ",".join(g.value for g in got), "exact",
                            all(g is want for g in got)))

    def afma(w):
        return 1.0 if _label(c, w, ratio) is OrderLabel.AFMA else -1.0

    lo, hi = 2.9, 3.0
    while hi - lo > 1e-5:
        mid = 0.5 * (lo + hi)
        lo, hi = (lo, mid) if afma(mid) > 0 else (mid, hi)
    equal = brentq(lambda w: np.subtract(*c.couplings(w).g_total[0, 1:]), 2.9, 3.1)
    checks.append(_close("AFMS/AFMA split", 0.5 * (lo + hi), equal, tol["split_location"],
                         relative=True, fmt=".5g"))
    return checks


SWEEPS = (
    (2.65, NamedState.AFMS, "afms_overlap"),
    (3.2, NamedState.AFMA, "afma_overlap"),
    (1.75, NamedState.GHZ, "ghz_overlap"),
    (2.977, NamedState.W_SUPERPOSITION, "w_overlap"),
)


def adiabatic_preparation(tol, seed=0):
    c = _crystal()
    checks = []
    for w, target, key in SWEEPS:
        cs = c.couplings(w)
        spec = IsingSpec(cs.g_total, gaussian_schedule(cs.g_rms))
        res = adiabatic_sweep(spec, targets=[target], n_samples=2)
        checks.append(_at_least(f"{target.name} at {w}", float(res.overlaps[target.name][-1]),
                                tol[key], fmt=".4f"))
    return checks


def ring_spectrum_check(tol, seed=0):
    wd = debye_frequency()
    spec_a = CrystalSpec(21, Trap.RING, gamma=100.0)
    spec_b = CrystalSpec(21, Trap.RING, gamma=1e4)
    d = np.arange(1, 11)
    w = midpoint(21, 1)
    a = ring_mediated_couplings(spec_a, w, d, override_guard=True)
    b = ring_mediated_couplings(spec_b, w, d, override_guard=True)
    return [_close("omega_D", wd, 6.94, tol["debye"], relative=True, fmt=".5f"),
            _below("max |G1(gamma=100) - G1(gamma=1e4)|", float(np.max(np.abs(a - b))),
                   tol["gamma_independence"])]


def ring_profiles(tol, seed=0):
    far = ring_profile(21, 10 * debye_frequency())
    ref = 0.5 / far.distances ** 3
    dev = float(np.max(np.abs(far.total / ref - 1)))
    upper = ring_profile(21, midpoint(21, 9)).total[:4]
    alternates = bool(np.all(upper[:-1] * upper[1:] < 0))
    return [_below("far-detuned max rel. deviation from 1/(2d^3)", dev, tol["far_detuned"]),
            Check("sign pattern d=1..4 at (w9+w10)/2", "alternating",
                  " ".join(f"{v:+.3f}" for v in upper), "-", alternates)]


def displacement_scaling(tol, seed=0, sizes=(11, 21, 41), samples=200):
    fm = displacement_bound(21, 0.1, midpoint(21, 1), "fm")
    afm = displacement_bound(22, 0.1, midpoint(22, 1), "afm")
    checks = [_below("FM", float(max(fm.full.max(), fm.approx.max())), tol["exact_zero"]),
              _below("AFM", float(max(afm.full.max(), afm.approx.max())), tol["exact_zero"])]
    ratios = []
    for k, n in enumerate(sizes):
        est = displacement_bound(n, 0.1, midpoint(n, 1), "random", samples=samples, seed=seed + k)
        ratios.append(float(np.median(est.full)) / np.sqrt(n))
    ratios = np.array(ratios)
    spread = float(np.max(np.abs(ratios / ratios.mean() - 1)))
    checks.append(Check("median/sqrt(N) constant", f"spread <= {tol['sqrt_scaling']:g}",
                        " ".join(f"{r:.4g}" for r in ratios) + f" (spread {spread:.2f})",
                        f"{tol['sqrt_scaling']:g} rel", spread <= tol["sqrt_scaling"]))
    return checks


def stark_sweet_spot(tol, seed=0):
    smap = stark_map(RotorSpec())
    sweet = find_sweet_spot(smap, (1, 2))
    s1, s2 = sweet.slopes
    e_ac = ac_amplitude_for(sweet, 0.1)
    mismatch = abs(abs(s1) - abs(s2)) * e_ac
    window = linear_window(smap, sweet, tol["linear_tolerance"])
    return [_close("E_0", sweet.field, 3.05, tol["sweet_field"], relative=True, fmt=".5f"),
            _close("mu_0", sweet.dipole, -0.16, tol["sweet_dipole"], fmt=".5f"),
            Check("slopes opposite", "opposite signs", f"{s1:+.4f} {s2:+.4f}", "-", s1 * s2 < 0),
            _below("slope mismatch x E_ac(eps=0.1)", mismatch, tol["linear_tolerance"], fmt=".4f"),
            Check("E_ac inside linear window", f"<= {0.5 * (window[1] - window[0]):.4f}",
                  f"{e_ac:.4f}", "-", e_ac <= 0.5 * (window[1] - window[0]))]


def property_suite(tol, seed=0):
    checks = []
    spec = CrystalSpec(5)
    sp = phonon_modes(spec)
    ring = phonon_modes(CrystalSpec(21, Trap.RING))
    orth = max(float(np.max(np.abs(m.modes @ m.modes.T - np.eye(len(m.modes))))) for m in (sp, ring))
    checks.append(_below("mode orthonormality", orth, tol["orthonormality"]))

    crystal = HarmonicCrystal.build(spec)
    com = int(np.argmin(np.abs(sp.frequencies - 1.0)))
    checks.append(_below("COM coupling", float(np.max(np.abs(crystal.g_spin_phonon[com]))),
                         tol["com_decoupling"]))

    rng = np.random.default_rng(seed)
    cs2 = HarmonicCrystal.build(CrystalSpec(2)).couplings(3.0)
    psi = rng.normal(size=4) + 1j * rng.normal(size=4)
    psi /= np.linalg.norm(psi)
    modes = coupled_modes(cs2)
    rep = evolve_full(FullState.vacuum(psi, len(modes), 5), cs2, 20.0)
    pops = np.real(np.diag(rep.final.reduced_spin_density()))
    checks.append(_below("sigma^z populations", float(np.max(np.abs(pops - np.abs(psi) ** 2))),
                         tol["population_conservation"]))

    fields = np.linspace(0.0, 6.0, 121)
    smap = stark_map(RotorSpec(fields=tuple(fields)))
    h = 1e-4
    worst = 0.0
    for f in fields[1:-1:10]:
        e_p, _ = _diagonalize(f + h, smap.j_max)
        e_m, _ = _diagonalize(f - h, smap.j_max)
        e0, v0 = _diagonalize(f, smap.j_max)
        worst = max(worst, float(np.max(np.abs(dipole_moments(v0, smap.j_max) + (e_p - e_m) / (2 * h)))))
    checks.append(_below("Hellmann-Feynman", worst, tol["hellmann_feynman"]))

    cs3 = _crystal().couplings(2.977)
    t = graph_time(cs3)
    psi3 = plus_state(3)
    m3 = coupled_modes(cs3)
    target = NamedState.GRAPH3.vector()
    f5 = graph_fidelity(evolve_full(FullState.vacuum(psi3, len(m3), 5), cs3, t)
                        .final.reduced_spin_density(), target)
    f7 = graph_fidelity(evolve_full(FullState.vacuum(psi3, len(m3), 7), cs3, t)
                        .final.reduced_spin_density(), target)
    f5_loose = graph_fidelity(evolve_full(FullState.vacuum(psi3, len(m3), 5), cs3, t, rtol=1e-8,
                                          atol=1e-10).final.reduced_spin_density(), target)
    checks.append(_below("oracle n_max 5 vs 7", abs(f5 - f7), tol["oracle_convergence"]))
    checks.append(_below("oracle rtol 1e-8 vs 1e-10", abs(f5 - f5_loose), tol["oracle_convergence"]))

    worst = 0.0
    for _ in range(5):
        g = rng.normal(size=(5, 5))
        g = np.triu(g, 1) + np.triu(g, 1).T
        e_classical, _ = classical_minimum(g)
        worst = max(worst, abs(ground_state(IsingSpec(g, 0.0)).energy - e_classical))
    checks.append(_below("B=0 ground energy vs brute force", worst, tol["classical_ground"]))
    return checks


CRITERIA = (
    (1, "lattice constants", lattice_constants),
    (2, "equal-coupling point", equal_coupling_point),
    (3, "sign change of G12 and G13", sign_change),
    (4, "valid-region boundaries", region_boundaries),
    (5, "graph-state fidelity", graph_fidelity_check),
    (6, "purity scaling", purity_scaling),
    (7, "phase diagram labels", phase_labels),
    (8, "adiabatic preparation", adiabatic_preparation),
    (9, "ring spectrum", ring_spectrum_check),
    (10, "ring profiles", ring_profiles),
    (11, "displacement scaling", displacement_scaling),
    (12, "Stark sweet spot", stark_sweet_spot),
    (13, "property suites", property_suite),
)


def run_criterion(number, tolerances=None, seed=0):
    tol = dict(TOLERANCES, **(tolerances or {}))
    for num, name, fn in CRITERIA:
        if num == number:
            t0 = time.perf_counter()
            checks = fn(tol, seed=seed)
            return Criterion(num, name, checks, time.perf_counter() - t0)
    raise KeyError(f"no criterion {number}")


def regress_all(tolerances=None, numbers=None, seed=0):
    """Run every criterion (or the listed ``numbers``) and return the results in order."""
    wanted = [n for n, _, _ in CRITERIA] if numbers is None else list(numbers)
    return [run_criterion(n, tolerances, seed) for n in wanted]


def report(results):
    """Deterministic text report (runtimes excluded)."""
    return "\n".join(r.line() for r in results) + "\n"
