import json
import subprocess
import sys

import numpy as np
import pytest

from obstruction_lab import cli
from obstruction_lab.errors import ContractError
from obstruction_lab.scenarios import (
    SCENARIOS,
    ScenarioConfig,
    emit_report,
    loglog_slope,
    run_scenario,
)

SMALL_AUDIT = {"extra": {"scalar_samples": 500, "matrix_samples": 10}}


def test_default_configs_validate_and_round_trip():
    for name in SCENARIOS:
        cfg = ScenarioConfig.for_scenario(name)
        again = ScenarioConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
        assert again == cfg


def test_shipped_example_configs_load():
    from pathlib import Path
    root = Path(__file__).resolve().parents[1] / "configs"
    files = sorted(root.glob("*.json"))
    assert len(files) == len(SCENARIOS)
    for f in files:
        assert ScenarioConfig.load(f).scenario == f.stem


@pytest.mark.parametrize("bad", [
    {"rep": {"family": "voiculescu", "n": [16, 8]}},
    {"rep": {"family": "voiculescu", "n": [8, 8]}},
    {"grid": 4},
    {"p": [0.5]},
    {"overhang": 0.1},
    {"norm_mode": "fast"},
    {"cycles": [[0, 0]]},
])
def test_config_validation(bad):
    with pytest.raises(ContractError):
        ScenarioConfig.for_scenario("z2-voiculescu-sweep", **bad)


def test_unknown_keys_and_versions():
    with pytest.raises(ContractError):
        ScenarioConfig.from_dict({"scenario": "property-audit", "colour": "red"})
    with pytest.raises(ContractError):
        ScenarioConfig.from_dict({"scenario": "property-audit", "schema_version": 9})
    with pytest.raises(ContractError):
        ScenarioConfig.from_dict({"scenario": "nope"})


def test_loglog_slope_recovers_power_law():
    x = np.array([8, 16, 32, 64.0])
    fit = loglog_slope(x, 3 * x ** -1.0, np.random.default_rng(0), n_boot=200)
    assert fit["slope"] == pytest.approx(-1.0)
    assert fit["ci95"][0] == pytest.approx(-1.0) and fit["ci95"][1] == pytest.approx(-1.0)


def test_emit_report_files(tmp_path):
    cfg = ScenarioConfig.for_scenario("z2-voiculescu-sweep",
                                      rep={"family": "voiculescu", "n": [8, 16]}, grid=16,
                                      extra={"refine_grids": [], "slope_n": [8, 16, 32]})
    report = run_scenario(cfg)
    names = {p.name for p in emit_report(report, tmp_path)}
    assert {"report.json", "sweep.csv", "timing.json", "decay_defect_inf.dat",
            "decay_curv_norm_2.dat"} <= names
    header = (tmp_path / "sweep.csv").read_text().splitlines()[0]
    assert header == ("n,dim,defect_inf,defect_1,defect_2,winding,ch1_pair,ch1_residual,"
                      "curv_norm_1,curv_norm_2,verdict")
    data = json.loads((tmp_path / "report.json").read_text())
    assert data["config"]["scenario"] == "z2-voiculescu-sweep"
    assert all(e["norm_mode"] == "estimator" and e["grid"] == [16, 16] for e in data["entries"])
    assert "seconds" not in json.dumps(data)


def test_controls_scenario_passes():
    report = run_scenario(ScenarioConfig.for_scenario("genuine-rep-controls", grid=32))
    assert report.ok, [c for c in report.checks if not c.passed]


def test_cli_audit_exit_zero(tmp_path, capsys):
    rc = cli.main(["audit", "--seed", "5", "--scalar-samples", "500", "--matrix-samples", "10",
                   "--out", str(tmp_path)])
    assert rc == 0
    assert "as expected" in capsys.readouterr().out
    assert (tmp_path / "report.json").exists()


def test_cli_run_config(tmp_path):
    cfg = ScenarioConfig.for_scenario("property-audit", **SMALL_AUDIT).to_dict()
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    assert cli.main(["run", str(path), "--out", str(tmp_path / "out")]) == 0


def test_cli_deviation_exit_two(tmp_path):
    # a coarse grid leaves ch1 far from the winding, which the sweep flags
    cfg = ScenarioConfig.for_scenario("z2-voiculescu-sweep",
                                      rep={"family": "voiculescu", "n": 8}, grid=16,
                                      extra={"refine_grids": [], "slope_n": [8, 16]})
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg.to_dict()))
    assert cli.main(["run", str(path)]) == 2


def test_cli_sweep_builds_config():
    args = cli.build_parser().parse_args(
        ["sweep", "--scenario", "curvature-decay", "--n", "8,16", "--grid", "32", "--out", "x"])
    cfg = cli._config_for(args)
    assert cfg.sweep() == [8, 16] and cfg.resolution() == (32, 32)


def test_cli_error_exit_one(tmp_path, capsys):
    assert cli.main(["run", str(tmp_path / "missing.json")]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text('{"scenario": "z2-voiculescu-sweep", "grid": 2}')
    assert cli.main(["run", str(bad)]) == 1
    assert "error" in capsys.readouterr().err


def test_threads_env_override(monkeypatch):
    monkeypatch.setenv("OBSTRUCTION_LAB_THREADS", "2")
    report = run_scenario(ScenarioConfig.for_scenario("property-audit", **SMALL_AUDIT))
    assert report.timing["threads"] == 2


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "obstruction_lab.cli", "--version"],
                         capture_output=True, text=True)
    assert out.returncode == 0 and "obstruction-lab" in out.stdout


def test_configs_match_documented_schema():
    jsonschema = pytest.importorskip("jsonschema")
    from pathlib import Path
    root = Path(__file__).resolve().parents[1]
    schema = json.loads((root / "docs" / "config_schema.json").read_text())
    for name in SCENARIOS:
        jsonschema.validate(ScenarioConfig.for_scenario(name).to_dict(), schema)
