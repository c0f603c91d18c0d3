"""Command-line front end.

``dipolar-spin-sim <kind> [--config file.json] [--out table.csv] [--seed N]``

Every kind has a flat set of defaults (see ``DEFAULTS``); a JSON config may
override any of them and nothing else.  Results are written as CSV with a JSON
sidecar ``<out>.json`` holding the resolved config, its hash and the package
version.  Exit codes: 0 success, 2 config error, 3 numerical failure,
4 regression failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .couplings import HarmonicCrystal, in_valid_region
from .crystal import CrystalSpec, Trap
from .dynamics import (ThermalSpec, graph_fidelity, graph_time, plus_state, purity,
                       reduced_density)
from .errors import ConfigError, SimulationError
from .oracle import FullState, coupled_modes, evolve_full, thermal_reduced_density
from .regression import CRITERIA, TOLERANCES, regress_all, report
from .ring import midpoint, ring_profile
from .rotor import RotorSpec, find_sweet_spot, linear_window, stark_map
from .spinmodel import (IsingSpec, NamedState, adiabatic_sweep, classify_order, ground_state,
                        gaussian_schedule)

DEFAULTS = {
    "coupling-scan": {"n_molecules": 3, "epsilon": 0.1, "omega_min": 0.1, "omega_max": 5.0,
                      "omega_step": 0.01, "margin_factor": 10.0},
    "graph-fidelity": {"omega": 2.977, "epsilons": [0.05, 0.1], "points": 201,
                       "t_over_gate_max": 1.0, "oracle": True, "n_max": 5, "temperature": 0.0},
    "purity-scan": {"omega": 2.977, "epsilon_min": 0.02, "epsilon_max": 0.2, "points": 181},
    "phase-diagram": {"omega_min": 0.1, "omega_max": 5.0, "omega_points": 50,
                      "field_min": 0.0, "field_max": 1.0, "field_points": 21, "epsilon": 0.1},
    "adiabatic": {"omega": 2.65, "epsilon": 0.1, "t_final": 60.0, "samples": 301,
                  "amplitude": 10.0, "width": 50 * np.pi},
    "ring-profile": {"n_molecules": 21, "lower_mode": 1, "omega_tilde": None, "epsilon": 0.1,
                     "gamma": 100.0, "exact": False},
    "stark-map": {"j_max": 12, "field_min": 0.0, "field_max": 6.0, "points": 601,
                  "states": [1, 2], "tolerance": 0.005},
    "regress-all": {"tolerances": {}, "criteria": None},
}

UNITS_TEXT = """\
Units used by every table (all dimensionless):
  harmonic trap   lengths in the central spacing a, frequencies and times in nu and 1/nu
  couplings       G in units D eps^2 / (hbar a^3); G [Hz] = G * eps^2 * (D / hbar a^3) [Hz]
                  e.g. D/(hbar a^3) = 2 pi x 50 kHz and eps = 0.1 give G = 0.911 -> 2 pi x 455 Hz
  ring trap       omega_tilde = omega sqrt(gamma) / (D / hbar a^3), gamma = D m / (hbar^2 a)
  rotor           energies in B, fields in B / mu_c, dipoles in mu_c
"""


@dataclass
class ResultTable:
    columns: list
    rows: list
    units: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        for r in self.rows:
            if len(r) != len(self.columns):
                raise ValueError("row length does not match the header")

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([_fmt(v) for v in r])
        return buf.getvalue()


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


def resolve_config(kind, config):
    if kind not in DEFAULTS:
        raise ConfigError(f"unknown experiment kind {kind!r}", key="kind")
    config = dict(config or {})
    config.pop("kind", None)
    unknown = sorted(set(config) - set(DEFAULTS[kind]))
    if unknown:
        raise ConfigError(f"unknown config key {unknown[0]!r} for {kind}", key=unknown[0])
    out = dict(DEFAULTS[kind])
    out.update(config)
    return out


def _grid(cfg, lo, hi, key):
    if cfg[lo] > cfg[hi]:
        raise ConfigError(f"{lo} exceeds {hi}", key=lo)
    if key.endswith("step"):
        if cfg[key] <= 0:
            raise ConfigError(f"{key} must be positive", key=key)
        n = int(np.floor((cfg[hi] - cfg[lo]) / cfg[key] + 1e-9)) + 1
        return cfg[lo] + cfg[key] * np.arange(n)
    if int(cfg[key]) < 1:
        raise ConfigError(f"{key} must be at least 1 (empty grid)", key=key)
    return np.linspace(cfg[lo], cfg[hi], int(cfg[key]))


def _map(fn, items, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


def coupling_scan(cfg, ctx):
    spec = CrystalSpec(int(cfg["n_molecules"]), epsilon=cfg["epsilon"])
    crystal = HarmonicCrystal.build(spec)
    regions = crystal.valid_regions(cfg["margin_factor"])
    omegas = _grid(cfg, "omega_min", "omega_max", "omega_step")
    n = spec.n_molecules
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    freqs = crystal.spectrum.frequencies
    coupled = np.any(crystal.g_spin_phonon != 0, axis=1)

    def row(w):
        valid = in_valid_region(w, regions)
        if not valid and not ctx["override"]:
            return None
        if np.any(coupled & (np.abs(freqs - w) < 1e-12)):
            return None
        cs = crystal.couplings(w, override_guard=True)
        return [w] + [cs.g_total[p] for p in pairs] + [cs.g_rms, valid]

    rows = [r for r in _map(row, omegas, ctx["threads"]) if r is not None]
    cols = ["omega"] + [f"G_{i + 1}{j + 1}" for i, j in pairs] + ["G_rms", "valid"]
    return ResultTable(cols, rows, {"omega": "nu", "G": "D eps^2/(hbar a^3), may-diverge"},
                       {"valid_regions": [[lo, None if hi == np.inf else hi] for lo, hi in regions]})


def graph_fidelity_scan(cfg, ctx):
    crystal = HarmonicCrystal.build(CrystalSpec(3))
    base = crystal.couplings(cfg["omega"], override_guard=ctx["override"])
    psi = plus_state(3)
    target = NamedState.GRAPH3.vector()
    thermal = ThermalSpec(cfg["temperature"])
    if int(cfg["points"]) < 1:
        raise ConfigError("points must be at least 1 (empty grid)", key="points")
    if not cfg["epsilons"]:
        raise ConfigError("epsilons is empty", key="epsilons")
    rows = []
    for eps in cfg["epsilons"]:
        cs = base.with_epsilon(eps)
        tg = graph_time(cs)
        times = np.linspace(0.0, cfg["t_over_gate_max"] * tg, int(cfg["points"]))
        oracle = [np.nan] * len(times)
        if cfg["oracle"]:
            modes = coupled_modes(cs)
            if cfg["temperature"] > 0:
                start = np.outer(psi, psi.conj())
                oracle = [graph_fidelity(thermal_reduced_density(psi, cs, t, thermal, cfg["n_max"])[0]
                                         if t > 0 else start, target) for t in times]
            else:
                rep = evolve_full(FullState.vacuum(psi, len(modes), cfg["n_max"]), cs, times[-1],
                                  times=times)
                oracle = [graph_fidelity(r, target) for r in rep.spin_densities]
        for k, t in enumerate(times):
            closed = graph_fidelity(reduced_density(psi, cs, t, thermal), target)
            rows.append([eps, t, t / tg, closed, oracle[k], purity(psi, cs, t, thermal)])
    return ResultTable(["epsilon", "t", "t_over_gate", "fidelity_closed", "fidelity_oracle", "purity"],
                       rows, {"t": "1/nu", "fidelity_oracle": "may be nan (oracle disabled)"})


def purity_scan(cfg, ctx):
    base = HarmonicCrystal.build(CrystalSpec(3)).couplings(cfg["omega"], override_guard=ctx["override"])
    eps = _grid(cfg, "epsilon_min", "epsilon_max", "points")
    rows = []
    for e in eps:
        cs = base.with_epsilon(e)
        tg = graph_time(cs)
        rows.append([e, tg, 1.0 - purity(plus_state(3), cs, tg)])
    return ResultTable(["epsilon", "t_gate", "one_minus_purity"], rows, {"t_gate": "1/nu"})


def phase_diagram_scan(cfg, ctx):
    crystal = HarmonicCrystal.build(CrystalSpec(3, epsilon=cfg["epsilon"]))
    regions = crystal.valid_regions()
    omegas = _grid(cfg, "omega_min", "omega_max", "omega_points")
    ratios = _grid(cfg, "field_min", "field_max", "field_points")
    omegas = [w for w in omegas if ctx["override"] or in_valid_region(w, regions)]

    def column(w):
        cs = crystal.couplings(w, override_guard=True)
        out = []
        for r in ratios:
            gs = ground_state(IsingSpec(cs.g_total, r * cs.g_rms))
            sc = classify_order(gs.state, gs.degeneracy)
            out.append([w, r, sc.fm, sc.afms, sc.afma, sc.paramagnetic, sc.label.value])
        return out

    rows = [r for block in _map(column, omegas, ctx["threads"]) for r in block]
    return ResultTable(["omega", "field_over_G_rms", "P_FM", "P_AFMS", "P_AFMA", "P_minus", "label"],
                       rows, {"omega": "nu"})


def adiabatic_scan(cfg, ctx):
    crystal = HarmonicCrystal.build(CrystalSpec(3, epsilon=cfg["epsilon"]))
    cs = crystal.couplings(cfg["omega"], override_guard=ctx["override"])
    sched = gaussian_schedule(cs.g_rms, cfg["amplitude"], cfg["width"])
    if int(cfg["samples"]) < 2:
        raise ConfigError("samples must be at least 2", key="samples")
    res = adiabatic_sweep(IsingSpec(cs.g_total, sched), t_final=cfg["t_final"],
                          n_samples=int(cfg["samples"]))
    names = list(res.overlaps)
    rows = [[t, sched(t) / cs.g_rms] + [res.overlaps[k][i] for k in names]
            for i, t in enumerate(res.times)]
    return ResultTable(["t", "field_over_G_rms"] + [f"overlap_{k}" for k in names], rows,
                       {"t": "hbar a^3 / (D eps^2)"}, {"norm_error": res.norm_error})


def ring_profile_scan(cfg, ctx):
    N = int(cfg["n_molecules"])
    w = cfg["omega_tilde"]
    if w is None:
        w = midpoint(N, int(cfg["lower_mode"]), cfg["exact"])
    prof = ring_profile(N, w, cfg["epsilon"], cfg["gamma"], cfg["exact"], ctx["override"])
    rows = [[int(d), g, g0, g1] for d, g, g0, g1 in
            zip(prof.distances, prof.total, prof.bare_half, prof.mediated_half)]
    return ResultTable(["distance", "G", "G0_half", "G1_half"], rows, {"G": "D eps^2/(hbar a^3)"},
                       {"omega_tilde": float(w)})


def stark_map_scan(cfg, ctx):
    fields = _grid(cfg, "field_min", "field_max", "points")
    smap = stark_map(RotorSpec(int(cfg["j_max"]), tuple(fields)))
    extra = {}
    states = tuple(int(s) for s in cfg["states"])
    try:
        sweet = find_sweet_spot(smap, states)
        win = linear_window(smap, sweet, cfg["tolerance"])
        extra = {"sweet_field": sweet.field, "sweet_dipole": sweet.dipole,
                 "slopes": list(sweet.slopes), "linear_window": list(win)}
    except SimulationError as exc:
        extra = {"sweet_spot_error": str(exc)}
    J = range(int(cfg["j_max"]) + 1)
    rows = [[f] + list(smap.energies[k]) + list(smap.dipoles[k]) for k, f in enumerate(smap.fields)]
    return ResultTable(["field"] + [f"E_{j}" for j in J] + [f"mu_{j}" for j in J], rows,
                       {"field": "B/mu_c", "E": "B", "mu": "mu_c"}, extra)


def regress_scan(cfg, ctx):
    unknown = set(cfg["tolerances"]) - set(TOLERANCES)
    if unknown:
        raise ConfigError(f"unknown tolerance {sorted(unknown)[0]!r}", key="tolerances")
    known = {n for n, _, _ in CRITERIA}
    if cfg["criteria"] is not None and not set(cfg["criteria"]) <= known:
        raise ConfigError("criteria must be numbers 1..13", key="criteria")
    results = regress_all(cfg["tolerances"], cfg["criteria"], seed=ctx["seed"])
    rows = [[r.number, r.name, "PASS" if r.passed else "FAIL"] for r in results]
    return ResultTable(["criterion", "name", "verdict"], rows, {},
                       {"report": report(results), "passed": all(r.passed for r in results)})


RUNNERS = {
    "coupling-scan": coupling_scan,
    "graph-fidelity": graph_fidelity_scan,
    "purity-scan": purity_scan,
    "phase-diagram": phase_diagram_scan,
    "adiabatic": adiabatic_scan,
    "ring-profile": ring_profile_scan,
    "stark-map": stark_map_scan,
    "regress-all": regress_scan,
}


def config_hash(kind, cfg, seed):
    doc = json.dumps({"kind": kind, "config": cfg, "seed": seed}, sort_keys=True)
    return hashlib.sha256(doc.encode()).hexdigest()


def run(kind, config=None, seed=0, threads=1, override=False):
    """Resolve ``config`` and run one experiment; returns ``(table, resolved_config)``."""
    cfg = resolve_config(kind, config)
    np.random.seed(seed % 2 ** 32)
    table = RUNNERS[kind](cfg, {"seed": seed, "threads": threads, "override": override})
    return table, cfg


def sidecar(kind, cfg, seed, override, table, csv_text):
    return {
        "kind": kind,
        "config": cfg,
        "seed": seed,
        "override_resonance_guard": override,
        "version": __version__,
        "config_sha256": config_hash(kind, cfg, seed),
        "output_sha256": hashlib.sha256(csv_text.encode()).hexdigest(),
        "columns": table.columns,
        "units": table.units,
        "results": {k: v for k, v in table.extra.items() if k != "report"},
    }


def build_parser():
    p = argparse.ArgumentParser(prog="dipolar-spin-sim",
                                description="Phonon-mediated Ising couplings in polar-molecule crystals")
    p.add_argument("kind", nargs="?", choices=sorted(RUNNERS))
    p.add_argument("--config", help="JSON file overriding the defaults of the chosen kind")
    p.add_argument("--out", help="CSV output path (stdout if omitted); sidecar written to <out>.json")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--override-resonance-guard", action="store_true",
                   help="allow modulation frequencies inside the forbidden detuning bands")
    p.add_argument("--units", action="store_true", help="print unit conventions and exit")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.units:
        sys.stdout.write(UNITS_TEXT)
        return 0
    if args.kind is None:
        sys.stderr.write("error: an experiment kind is required\n")
        return 2
    if args.seed < 0 or args.seed >= 2 ** 64:
        sys.stderr.write("error: seed must be an unsigned 64-bit integer\n")
        return 2
    try:
        config = {}
        if args.config:
            with open(args.config, encoding="utf-8") as fh:
                config = json.load(fh)
            if not isinstance(config, dict):
                raise ConfigError("config must be a JSON object", key="<root>")
        table, cfg = run(args.kind, config, args.seed, args.threads, args.override_resonance_guard)
    except (ConfigError, json.JSONDecodeError, OSError) as exc:
        sys.stderr.write(f"config error: {exc}\n")
        return 2
    except (SimulationError, ValueError) as exc:
        sys.stderr.write(f"numerical failure in {args.kind}: {exc}\n")
        return 3
    text = table.to_csv()
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        with open(args.out + ".json", "w", encoding="utf-8") as fh:
            json.dump(sidecar(args.kind, cfg, args.seed, args.override_resonance_guard, table, text),
                      fh, indent=2, sort_keys=True)
            fh.write("\n")
    else:
        sys.stdout.write(text)
    if args.kind == "regress-all":
        sys.stderr.write(table.extra["report"])
        return 0 if table.extra["passed"] else 4
    return 0


def main_exit():
    sys.exit(main())


if __name__ == "__main__":
    main_exit()
