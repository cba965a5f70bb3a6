import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from artifact.cli import main

from .oracles import EXAMPLE_B


def _json(path):
    return json.loads(path.read_text())


def test_linear_run_writes_artifacts(tmp_path):
    assert main(["run", "--scenario", "linear_2x2", "--out", str(tmp_path)]) == 0
    names = {p.name for p in tmp_path.iterdir()}
    assert names == {"effective_config.json", "recovered_B.json", "recovered_A.json", "trajectories.csv", "diagnostics.json"}
    rb = _json(tmp_path / "recovered_B.json")
    assert np.abs(np.array(rb["B_hat"]) - EXAMPLE_B).max() <= 5e-3
    assert rb["schema_version"] == 1
    with open(tmp_path / "trajectories.csv") as fh:
        rows = list(csv.DictReader(fh))
    # three experiments of 100 steps plus the initial sample
    assert len(rows) == 3 * 101
    assert {r["experiment_id"] for r in rows} == {"a0_u0", "a0_u1", "a0_u2"}
    assert not any(p.name.endswith(".tmp") for p in tmp_path.iterdir())


def test_bloch_fourier_run(tmp_path):
    assert main(["run", "--scenario", "bloch", "--out", str(tmp_path), "--basis", "fourier", "--order", "2"]) == 0
    report = _json(tmp_path / "validation_report.json")
    assert report["num_points"] == 1000
    with open(tmp_path / "field_samples.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["x1", "x2", "x3", "entry_id", "true_value", "recovered_value"]
    assert len(rows) - 1 == 1000 * 6
    coef = _json(tmp_path / "coefficients.json")
    assert coef["basis"]["family"] == "fourier"
    assert len(coef["entries"]) == 6 and len(coef["entries"][0]["coefficients"]) == 13


def test_prc_noise_small_study(tmp_path):
    args = ["run", "--scenario", "prc_noise", "--out", str(tmp_path), "--n-values", "3,9", "--trials", "3",
            "--num-anchors", "8", "--validation-points", "50"]
    assert main(args) == 0
    with open(tmp_path / "convergence.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [int(r["N"]) for r in rows] == [3, 9]
    assert all(int(r["trials"]) == 3 for r in rows)
    assert all(float(r["q25"]) <= float(r["median_error"]) <= float(r["q75"]) for r in rows)


@pytest.mark.parametrize(
    "extra",
    [["--ts", "-1"], ["--basis", "wavelet"], ["--dt", "3e-5"], ["--num-perturbations", "1"], ["--n-values", "5,2"]],
)
def test_config_errors_exit_2_and_write_nothing(tmp_path, extra):
    out = tmp_path / "out"
    code = main(["run", "--scenario", "bloch", "--out", str(out), *extra])
    assert code == 2
    assert not out.exists() or not any(out.iterdir())


def test_unknown_scenario_and_bad_config_file(tmp_path):
    assert main(["run", "--scenario", "nope", "--out", str(tmp_path / "o")]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["run", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2
    bad.write_text(json.dumps({"overrides": {}}))
    assert main(["run", "--config", str(bad), "--out", str(tmp_path / "o")]) == 2
    assert not (tmp_path / "o").exists()


def test_runtime_failure_writes_error_report(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"scenario": "linear_2x2", "overrides": {"A": [[1e8, 0.0], [0.0, 0.0]]}}))
    out = tmp_path / "out"
    with np.errstate(all="ignore"):
        assert main(["run", "--config", str(cfg), "--out", str(out)]) == 1
    rep = _json(out / "error_report.json")
    assert rep["stage"] == "experiments"
    assert rep["error_type"] == "ExperimentError"
    assert rep["anchor_index"] == 0 and rep["input_index"] == 0
    assert (out / "effective_config.json").exists()


def test_effective_config_round_trip(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--scenario", "prc", "--out", str(a), "--seed", "4", "--order", "3"]) == 0
    assert main(["run", "--config", str(a / "effective_config.json"), "--out", str(b)]) == 0
    for name in sorted(p.name for p in a.iterdir()):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name
    cfg = _json(a / "effective_config.json")
    assert cfg["scenario"] == "prc" and cfg["overrides"]["order"] == 3 and len(cfg["checksum"]) == 64


def test_oracle_derivatives_flag(tmp_path):
    assert main(["run", "--scenario", "linear_2x2", "--out", str(tmp_path), "--oracle-derivatives"]) == 0
    rb = _json(tmp_path / "recovered_B.json")
    assert rb["derivatives"] == "exact"
    assert np.abs(np.array(rb["B_hat"]) - EXAMPLE_B).max() <= 1e-12


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "artifact", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0 and "run" in proc.stdout
    proc = subprocess.run([sys.executable, "-m", "artifact", "run"], capture_output=True, text=True)
    assert proc.returncode == 2
