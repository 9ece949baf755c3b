import hashlib
import json
import subprocess
import sys

import numpy as np
import pytest

from lovqa import cli, dvps
from lovqa.experiments import ConfigError, ExperimentConfig
from lovqa.io import read_csv


def run(*args):
    return cli.main([str(a) for a in args])


def digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_sweep_single_point(tmp_path):
    assert run("sweep", "--seed", 1, "--out", tmp_path, "--set", "grid_points=1") == 0
    text = (tmp_path / "sweep.csv").read_text().splitlines()
    assert text[0].startswith("# config_hash=")
    header, rows = read_csv(tmp_path / "sweep.csv")
    assert header == ["x", "cost_boson", "cost_fermion", "cost_dvps"] and len(rows) == 1


def test_sweep_dvps_agrees_with_boson_at_multiples_of_pi(tmp_path):
    assert run("sweep", "--seed", 2, "--out", tmp_path, "--set", "grid_points=4") == 0
    _, rows = read_csv(tmp_path / "sweep.csv")
    vals = np.array(rows, dtype=float)
    # grid points 0, pi/2, pi, 3pi/2
    np.testing.assert_allclose(vals[[0, 2], 1], vals[[0, 2], 3], atol=1e-12)
    assert abs(vals[1, 1] - vals[1, 3]) > 1e-6


def test_sweep_harmonic_content(tmp_path):
    assert run("sweep", "--seed", 5, "--out", tmp_path, "--set", "grid_points=5") == 0
    _, rows = read_csv(tmp_path / "sweep.csv")
    vals = np.array(rows, dtype=float)
    c = np.abs(np.fft.rfft(vals[:, 1:], axis=0)) / 5
    assert np.all(c[2, 1:] < 1e-9)
    assert c[2, 0] > 1e-6


def test_missing_seed_is_config_error(tmp_path, capsys):
    assert run("sweep", "--out", tmp_path) == 2
    assert "seed" in capsys.readouterr().err


def test_unknown_key_is_config_error(tmp_path):
    assert run("sweep", "--seed", 1, "--out", tmp_path, "--set", "bogus=1") == 2


def test_odd_sizes_rejected(tmp_path):
    assert run("variance", "--seed", 1, "--out", tmp_path, "--set", "sizes=[5]") == 2


def test_unreachable_weight_rejected(tmp_path):
    assert run("solve", "--seed", 1, "--out", tmp_path, "--set", "n_modes=4", "--set", "w=5") == 2


def test_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"experiment": "variance", "seed": 3, "sizes": [2], "trials": 1}))
    assert run("--config", cfg, "--seed", 4, "--out", tmp_path) == 0
    header, rows = read_csv(tmp_path / "variance.csv")
    assert header == ["N", "var_boson", "var_fermion", "trials", "degenerate"]
    assert rows == [["2", "0.0", "0.0", "1", "1"]]
    assert "seed=4" in (tmp_path / "variance.csv").read_text().splitlines()[0]


def test_experiment_flag(tmp_path):
    assert run("--experiment", "sample", "--seed", 1, "--out", tmp_path, "--shots", 100) == 0
    header, rows = read_csv(tmp_path / "sample.csv")
    assert header == ["occupation", "probability", "count"]
    assert sum(int(r[2]) for r in rows) == 100
    assert sum(float(r[1]) for r in rows) == pytest.approx(1.0)


def test_sampled_backend_needs_shots(tmp_path):
    assert run("sample", "--seed", 1, "--out", tmp_path, "--backend", "boson-sampled") == 2


def test_infeasible_bank_exit_code(tmp_path, monkeypatch):
    def fail(x, anc, restarts, seed):
        raise dvps.InfeasibleError(x, 0.5)

    monkeypatch.setattr(dvps, "synthesize", fail)
    code = run("dvps-bank", "--seed", 1, "--out", tmp_path, "--set", "x_points=2", "--set", "ancillas=[[1,0]]")
    assert code == 3
    _, rows = read_csv(tmp_path / "dvps_bank.csv")
    assert len(rows) == 2 and rows[0][2] == "nan" and rows[0][3] == "0.5"


def test_small_bank(tmp_path):
    assert run("dvps-bank", "--seed", 1, "--out", tmp_path, "--set", "x_points=3",
               "--set", "restarts=4", "--set", "ancillas=[[1,0],[0,1]]") == 0
    _, rows = read_csv(tmp_path / "dvps_bank.csv")
    p = {(float(r[0]), r[1]): float(r[2]) for r in rows}
    assert p[(0.0, "10")] == pytest.approx(1.0) and p[(np.pi, "01")] == pytest.approx(1.0)
    data = json.loads((tmp_path / "dvps_bank.json").read_text())
    assert len(data["solutions"]) == 6


def test_solve_small(tmp_path):
    assert run("solve", "--seed", 2, "--out", tmp_path, "--set", "n_modes=4", "--set", "instances=2",
               "--set", "gd_max_steps=3", "--set", "max_sweeps=20") == 0
    header, rows = read_csv(tmp_path / "solve_traces.csv")
    assert header[-1] == "cumulative_evals"
    assert {r[1] for r in rows} == {"boson_gd", "fermion_gd", "fermion_rotosolve"}
    first = [r for r in rows if r[0] == "0" and r[1] == "boson_gd"][0]
    assert float(first[5]) == pytest.approx(1.0)
    summary = json.loads((tmp_path / "solve_summary.json").read_text())
    assert set(summary["mean_evals"]) == {"boson_gd", "fermion_gd", "fermion_rotosolve"}
    for inst in summary["instances"]:
        costs = [float(r[4]) for r in rows if r[0] == str(inst["instance"]) and r[1] == "fermion_rotosolve"]
        assert np.all(np.diff(costs) <= 1e-12)


def test_solve_unconstrained_uses_doubled_modes(tmp_path):
    assert run("solve", "--seed", 3, "--out", tmp_path, "--set", "n_modes=2", "--set", "instances=1",
               "--set", "constrained=false", "--set", 'optimizers=["fermion_rotosolve"]') == 0
    summary = json.loads((tmp_path / "solve_summary.json").read_text())
    theta = summary["instances"][0]["runs"]["fermion_rotosolve"]["final_theta"]
    assert len(theta) == 16


def test_spectrum_small(tmp_path):
    assert run("spectrum", "--seed", 1, "--out", tmp_path, "--set", "n_modes=4",
               "--set", "instances=4", "--set", "photon_numbers=[1,2]") == 0
    _, rows = read_csv(tmp_path / "spectrum.csv")
    ratios = {(int(r[0]), int(r[1])): float(r[3]) for r in rows}
    assert ratios[(1, 1)] == 1.0 and ratios[(2, 1)] == 1.0
    assert ratios[(2, 2)] < 1.0


def test_rotosolve_boson_zero_sweeps(tmp_path):
    assert run("rotosolve-boson", "--seed", 1, "--out", tmp_path, "--set", "max_sweeps=0",
               "--set", "n_modes=3", "--set", "n=2") == 0
    _, rows = read_csv(tmp_path / "rotosolve_boson.csv")
    assert [r[0] for r in rows] == ["rotosolve", "gd"]
    assert rows[0][4] == rows[1][4]


@pytest.mark.parametrize("args", [
    ["variance", "--set", "sizes=[2,4]", "--set", "trials=12"],
    ["solve", "--set", "n_modes=4", "--set", "instances=3", "--set", "gd_max_steps=2", "--set", "max_sweeps=3"],
    ["sweep", "--set", "grid_points=7", "--shots", 200],
])
def test_threads_do_not_change_outputs(tmp_path, args):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run(*args, "--seed", 9, "--out", a, "--threads", 1) == 0
    assert run(*args, "--seed", 9, "--out", b, "--threads", 3) == 0
    files = sorted(p.name for p in a.iterdir())
    assert files == sorted(p.name for p in b.iterdir())
    for name in files:
        assert digest(a / name) == digest(b / name)


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "lovqa", "sweep", "--seed", "1", "--out", str(tmp_path),
                          "--set", "grid_points=2"], capture_output=True, text=True)
    assert out.returncode == 0 and "sweep.csv" in out.stdout


def test_config_validation_direct():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"experiment": "nope", "seed": 1})
    cfg = ExperimentConfig.from_dict({"experiment": "sweep", "seed": 1, "threads": 4, "out": "x"})
    assert cfg.hash() == ExperimentConfig.from_dict({"experiment": "sweep", "seed": 1}).hash()
