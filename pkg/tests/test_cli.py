import csv
import io
import json
import shutil
import subprocess
import sys

import pytest
import yaml

from flatlab import cli

BOX3 = {"lower": [-0.5, -0.5, -0.5], "upper": [0.5, 0.5, 0.5], "grid": [8, 8, 8]}
SPHERE = {"kind": "sphere", "params": {"radius": 1.0}, "box": {"lower": [0.5, 0.0], "upper": [2.6, 6.0], "grid": [16, 16]}}
EUCLID = {"kind": "euclidean", "params": {"c": [[1, 0, 0], [0, 2, 0.1], [0, 0.1, 1]]}, "box": BOX3}


def write(tmp_path, name, cfg):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(cfg))
    return str(path)


def run(tmp_path, command, cfg, *extra):
    """Run the CLI in-process; returns (exit code, parsed report or None)."""
    out = tmp_path / f"{command}-report.json"
    cfg = {**cfg, "output": {"report": str(out)}}
    code = cli.main([command, "--config", write(tmp_path, f"{command}.yaml", cfg), *extra])
    return code, (json.loads(out.read_text()) if out.exists() else None)


def strip_timings(text):
    doc = json.loads(text)
    doc.pop("timings")
    doc["config"].pop("output")
    return doc


def test_verify_euclidean_passes(tmp_path):
    code, rep = run(tmp_path, "verify", {"field": EUCLID})
    assert code == 0
    assert [c["name"] for c in rep["checks"]] == ["antisym", "bianchi1", "bianchi2", "veblen", "pair-sym", "weyl-trace"]
    assert all(c["pass"] for c in rep["checks"])


def test_flatness_on_sphere_is_a_report_not_a_failure(tmp_path):
    code, rep = run(tmp_path, "flatness", {"field": SPHERE})
    assert code == 0
    assert rep["results"]["max_residuals"]["scalar"] == pytest.approx(2.0)
    assert not rep["results"]["curvature_flat"]


def test_census_command(tmp_path):
    code, rep = run(tmp_path, "census", {"census": {"system": "CurvFlatConn", "n": 7}})
    assert code == 0
    assert rep["results"]["census"] == [
        {"system": "CurvFlatConn", "n": 7, "equations": 196, "unknowns": 196, "kind": "determined"}
    ]


def test_curvature_command_on_sphere(tmp_path):
    code, rep = run(tmp_path, "curvature", {"field": SPHERE, "sample": {"count": 4}})
    assert code == 0
    assert all(abs(s - 2.0) < 1e-10 for s in rep["results"]["scalar"])


def test_deviation_with_override_and_oracle(tmp_path):
    band = {"kind": "sphere", "box": {"lower": [1.0707963267948966, 0.0], "upper": [2.0707963267948966, 1.0], "grid": [8, 8]}}
    code, rep = run(tmp_path, "deviation", {"field": band, "functional": "TotalScalar/Metric"}, "--quad.grid", "64,64")
    assert code == 0
    assert rep["config"]["quad"]["grid"] == [64, 64]
    assert abs(rep["results"]["functional"] - 1.91770215) < 1e-3 * 1.92
    cfg = {"field": {"kind": "polynomial_spd", "seed": 3, "params": {"degree": 1}, "box": BOX3}, "functional": "ConnNorm/Metric"}
    code, rep = run(tmp_path, "deviation", cfg, "--oracle.bumps", "2")
    assert code == 0 and rep["checks"][-1]["name"] == "oracle-mismatch"


def test_minimize_command(tmp_path):
    cfg = {
        "functional": "RiemannNorm/Metric",
        "family": {"kind": "conformal_scale", "box": {"lower": [-0.5, -0.5], "upper": [0.5, 0.5], "grid": [24, 24]}},
        "theta0": [0.3],
    }
    code, rep = run(tmp_path, "minimize", cfg)
    assert code == 0
    assert abs(rep["results"]["theta"][0]) < 1e-4


def test_normal_metric_command(tmp_path):
    code, rep = run(tmp_path, "normal-metric", {"prescription": {"n": 3, "seed": 2}, "gray": {"rho": [0.1, 0.05]}})
    assert code == 0
    names = [c["name"] for c in rep["checks"]]
    assert names == ["curvature-at-origin", "gray-rho-0.1", "gray-rho-0.05"]


def test_identical_runs_are_byte_identical_modulo_timings(tmp_path):
    cfg = write(tmp_path, "v.yaml", {"field": SPHERE, "seed": 4})
    texts = []
    for k in range(2):
        out = tmp_path / f"r{k}.json"
        assert cli.main(["verify", "--config", cfg, "--output.report", str(out)]) == 0
        texts.append(out.read_text())
    a, b = (strip_timings(t) for t in texts)
    assert a == b
    assert cli.report_json({**a, "timings": {}}) == cli.report_json({**b, "timings": {}})


def test_report_roundtrip_recovers_check_values(tmp_path):
    code, rep = run(tmp_path, "verify", {"field": {"kind": "polynomial_spd", "seed": 2, "params": {"degree": 2}, "box": BOX3}})
    again = json.loads(cli.report_json(rep))
    assert [c["value"] for c in again["checks"]] == [c["value"] for c in rep["checks"]]


def test_table_output(tmp_path):
    table = tmp_path / "t.csv"
    code, rep = run(tmp_path, "verify", {"field": EUCLID}, "--output.table", str(table))
    rows = list(csv.reader(io.StringIO(table.read_text())))
    assert rows[0] == ["name", "value", "tolerance", "pass"]
    assert len(rows) == 1 + len(rep["checks"])


def test_empty_check_list_is_a_valid_document():
    rep = {"command": "census", "checks": [], "passed": True}
    assert json.loads(cli.emit_report(rep, None))["checks"] == []
    assert cli.emit_report(rep, None, fmt="table").strip() == "name,value,tolerance,pass"


def test_config_hash_tracks_meaningful_fields():
    base = cli.normalize_config("verify", {"field": EUCLID})
    same = cli.normalize_config("verify", {"field": EUCLID, "output": {"report": "elsewhere.json"}})
    seed = cli.normalize_config("verify", {"field": EUCLID, "seed": 1})
    tol = cli.normalize_config("verify", {"field": EUCLID, "tolerances": {"fd": 1e-4}})
    assert cli.config_hash(base) == cli.config_hash(same)
    assert len({cli.config_hash(c) for c in (base, seed, tol)}) == 3


def test_exit_1_on_check_failure(tmp_path, capsys):
    cfg = {"field": {"kind": "polynomial_spd", "seed": 2, "params": {"degree": 2}, "box": BOX3}, "tolerances": {"fd": 1e-14}}
    code, rep = run(tmp_path, "verify", cfg)
    assert code == 1 and not rep["passed"]
    assert "check failed" in capsys.readouterr().err


@pytest.mark.parametrize(
    "cfg",
    [
        {"field": EUCLID, "bogus": 1},
        {"field": {**EUCLID, "kind": "nope"}},
        {"field": EUCLID, "sample": {"colour": 2}},
        {"census": {"system": "Nope"}},
    ],
)
def test_exit_2_on_invalid_config(tmp_path, cfg):
    command = "census" if "census" in cfg else "verify"
    assert run(tmp_path, command, cfg)[0] == 2


def test_exit_2_on_missing_config_and_unwritable_output(tmp_path):
    assert cli.main(["verify", "--config", str(tmp_path / "missing.yaml")]) == 2
    cfg = write(tmp_path, "c.yaml", {"field": EUCLID})
    assert cli.main(["verify", "--config", cfg, "--output.report", str(tmp_path / "no" / "such" / "dir.json")]) == 2


def test_exit_3_on_numerical_failure(tmp_path):
    bad = {**EUCLID, "params": {"c": [[1, 2, 0], [2, 1, 0], [0, 0, 1]]}}
    assert run(tmp_path, "verify", {"field": bad})[0] == 3


def test_exit_4_on_domain_and_gauge_failures(tmp_path):
    # a negative shrink pushes sample points outside the chart box
    assert run(tmp_path, "flatness", {"field": SPHERE, "sample": {"shrink": -0.5}})[0] == 4
    off_gauge = {"kind": "polynomial_spd", "seed": 1, "params": {"degree": 1}, "box": BOX3}
    cfg = {"field": off_gauge, "functional": "RicciNorm/Metric/harmonic", "oracle": {"bumps": 1}}
    assert run(tmp_path, "deviation", cfg)[0] == 4


def test_override_parsing():
    cfg = cli.apply_overrides({"a": {"b": 1}}, ["--a.b", "2", "--c.d", "1,2", "--e", "x"])
    assert cfg == {"a": {"b": 2}, "c": {"d": [1, 2]}, "e": "x"}
    with pytest.raises(cli.ConfigInvalid):
        cli.apply_overrides({}, ["--a"])
    with pytest.raises(cli.ConfigInvalid):
        cli.apply_overrides({"a": 1}, ["--a.b", "2"])


@pytest.mark.skipif(shutil.which("flatlab") is None, reason="console script not installed")
def test_console_script(tmp_path):
    cfg = write(tmp_path, "c.yaml", {"census": {"system": "CurvFlatMetric", "n": 3}})
    proc = subprocess.run(["flatlab", "census", "--config", cfg], capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["results"]["census"][0]["kind"] == "determined"


def test_module_entry_point(tmp_path):
    cfg = write(tmp_path, "c.yaml", {"census": {"system": "ConnFlat1", "n": 1}})
    proc = subprocess.run([sys.executable, "-m", "flatlab.cli", "census", "--config", cfg], capture_output=True, text=True)
    assert proc.returncode == 0
