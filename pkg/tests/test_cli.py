import csv
import json

import pytest

from dipolar_spin_sim import __version__
from dipolar_spin_sim.cli import DEFAULTS, main, resolve_config, run
from dipolar_spin_sim.errors import ConfigError

SMALL = {
    "coupling-scan": {"omega_min": 2.9, "omega_max": 3.1, "omega_step": 0.05},
    "graph-fidelity": {"epsilons": [0.1], "points": 3, "oracle": False},
    "purity-scan": {"points": 5},
    "phase-diagram": {"omega_min": 2.7, "omega_max": 3.2, "omega_points": 3, "field_points": 2},
    "adiabatic": {"samples": 5},
    "ring-profile": {},
    "stark-map": {"points": 121},
    "regress-all": {"criteria": [1, 4]},
}


def write(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


@pytest.mark.parametrize("kind", sorted(SMALL))
def test_every_kind_runs(tmp_path, kind):
    out = tmp_path / "out.csv"
    code = main([kind, "--config", write(tmp_path / "c.json", SMALL[kind]), "--out", str(out)])
    assert code == 0
    rows = list(csv.reader(out.open()))
    assert len(rows) >= 2
    assert all(len(r) == len(rows[0]) for r in rows)
    side = json.loads((tmp_path / "out.csv.json").read_text())
    assert side["kind"] == kind and side["version"] == __version__
    assert side["columns"] == rows[0]


def test_coupling_scan_columns_and_precision(tmp_path):
    out = tmp_path / "g.csv"
    main(["coupling-scan", "--config", write(tmp_path / "c.json", SMALL["coupling-scan"]),
          "--out", str(out)])
    rows = list(csv.reader(out.open()))
    assert rows[0] == ["omega", "G_12", "G_13", "G_23", "G_rms", "valid"]
    # 17 significant digits round-trip exactly
    for r in rows[1:]:
        for v in r[:-1]:
            assert repr(float(v)) == repr(float("%.17g" % float(v)))


def test_deterministic_and_round_trip(tmp_path):
    cfg = write(tmp_path / "c.json", SMALL["purity-scan"])
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["purity-scan", "--config", cfg, "--out", str(a), "--seed", "5"])
    main(["purity-scan", "--config", cfg, "--out", str(b), "--seed", "5"])
    assert a.read_bytes() == b.read_bytes()
    side = json.loads((tmp_path / "a.csv.json").read_text())
    c = tmp_path / "c.csv"
    main(["purity-scan", "--config", write(tmp_path / "r.json", side["config"]), "--out", str(c),
          "--seed", str(side["seed"])])
    side_c = json.loads((tmp_path / "c.csv.json").read_text())
    assert side_c["output_sha256"] == side["output_sha256"]
    assert side_c["config_sha256"] == side["config_sha256"]


def test_threads_do_not_change_output(tmp_path):
    cfg = write(tmp_path / "c.json", SMALL["phase-diagram"])
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["phase-diagram", "--config", cfg, "--out", str(a)])
    main(["phase-diagram", "--config", cfg, "--out", str(b), "--threads", "3"])
    assert a.read_bytes() == b.read_bytes()


def test_unknown_key_is_config_error(tmp_path, capsys):
    code = main(["ring-profile", "--config", write(tmp_path / "c.json", {"gama": 3})])
    assert code == 2
    assert "gama" in capsys.readouterr().err
    with pytest.raises(ConfigError) as info:
        resolve_config("ring-profile", {"gama": 3})
    assert info.value.key == "gama"


def test_empty_grid_is_config_error(tmp_path):
    assert main(["coupling-scan", "--config",
                 write(tmp_path / "c.json", {"omega_min": 3.0, "omega_max": 1.0})]) == 2
    assert main(["purity-scan", "--config", write(tmp_path / "d.json", {"points": 0})]) == 2
    assert main(["graph-fidelity", "--config", write(tmp_path / "e.json", {"epsilons": []})]) == 2


def test_resonant_drive_is_numerical_failure(tmp_path, capsys):
    cfg = write(tmp_path / "c.json", {"omega": 2.2, "samples": 3})
    assert main(["adiabatic", "--config", cfg]) == 3
    assert "adiabatic" in capsys.readouterr().err
    assert main(["adiabatic", "--config", cfg, "--override-resonance-guard"]) == 0


def test_guard_controls_scan_rows():
    cfg = {"omega_min": 2.0, "omega_max": 2.5, "omega_step": 0.1}
    guarded, _ = run("coupling-scan", cfg)
    open_scan, _ = run("coupling-scan", cfg, override=True)
    assert len(guarded.rows) == 0
    assert len(open_scan.rows) == 6
    assert not any(r[-1] for r in open_scan.rows)


def test_regression_failure_exit_code(tmp_path, capsys):
    cfg = write(tmp_path / "c.json", {"criteria": [1], "tolerances": {"xi3": 1e-6}})
    assert main(["regress-all", "--config", cfg]) == 4
    assert "lattice constants" in capsys.readouterr().err
    ok = write(tmp_path / "ok.json", {"criteria": [1, 2]})
    assert main(["regress-all", "--config", ok]) == 0


def test_regression_report_is_reproducible(tmp_path, capsys):
    cfg = write(tmp_path / "c.json", {"criteria": [9, 10, 11]})
    main(["regress-all", "--config", cfg, "--seed", "3"])
    first = capsys.readouterr()
    main(["regress-all", "--config", cfg, "--seed", "3"])
    second = capsys.readouterr()
    assert first.out == second.out and first.err == second.err


def test_bad_tolerance_key(tmp_path):
    cfg = write(tmp_path / "c.json", {"tolerances": {"nope": 1}})
    assert main(["regress-all", "--config", cfg]) == 2


def test_units_and_missing_kind(capsys):
    assert main(["--units"]) == 0
    assert "B / mu_c" in capsys.readouterr().out
    assert main([]) == 2


def test_defaults_cover_all_kinds():
    assert set(DEFAULTS) == set(SMALL)
