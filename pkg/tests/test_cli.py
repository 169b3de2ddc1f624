import json
import subprocess
import sys
from pathlib import Path

import pytest

from pssmp.cli import main


def run(*args):
    return main(list(args))


def tree(path: Path):
    return {p.name: p.read_bytes() for p in sorted(path.iterdir()) if p.name != "manifest.json"}


def test_simulate_zero(tmp_path, capsys):
    code = run("simulate", "--model", "zero", "--x", "3", "--alpha", "2", "--times", "1", "--n", "100",
               "--out", str(tmp_path))
    assert code == 0
    assert capsys.readouterr().out.strip() == "X^(100)_1 = 3"
    assert (tmp_path / "manifest.json").exists() and (tmp_path / "simulate.csv").exists()


def test_manifest_records_final_values(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("[model]\npreset = bessel3\n[experiment]\nx = 2\ntimes = 1\n[run]\nseed = 5\n")
    code = run("simulate", "--config", str(cfg), "--x", "1.5", "--set", "run.seed=9", "--n", "50",
               "--out", str(tmp_path / "o"))
    assert code == 0
    m = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert m["config"]["experiment"]["x"] == "1.5"
    assert m["config"]["run"]["seed"] == "9"
    assert m["config"]["model"] == {"kind": "brownian_drift", "mu": "0.5", "sigma": "1"}


def test_error_experiment_outputs_and_idempotence(tmp_path):
    args = ["error-experiment", "--config", "bessel3.cfg", "--seed", "42", "--N", "1000", "--reps", "20",
            "--workers", "1"]
    assert run(*args, "--out", str(tmp_path / "a")) == 0
    assert run(*args, "--out", str(tmp_path / "b")) == 0
    a, b = tree(tmp_path / "a"), tree(tmp_path / "b")
    assert a == b
    for n in (10, 100):
        for field in ("prelimit_tau_err", "prelimit_rel_err", "time_shift_prelimit", "frac_part"):
            assert f"hist_{field}_n{n}_t1.csv" in a
    assert "records.csv" in a and "summary.csv" in a


def test_zoom_and_frac_and_oracle(tmp_path, capsys):
    assert run("zoom-experiment", "--model", "bessel3", "--n", "10000", "--reps", "50", "--out", str(tmp_path / "z")) == 0
    assert "ks_vs_normal" in capsys.readouterr().out
    assert run("frac-uniformity", "--model", "bessel3", "--N", "100", "--reps", "50", "--out", str(tmp_path / "f")) == 0
    assert run("oracle-compare", "--model", "bessel3", "--n", "100", "--reps", "50", "--out", str(tmp_path / "o")) == 0
    assert (tmp_path / "o" / "oracle.csv").exists()


def test_oracle_requires_bessel3(tmp_path):
    assert run("oracle-compare", "--model", "zero", "--out", str(tmp_path)) == 1


@pytest.mark.parametrize("args", [
    ["simulate", "--bogus"],
    ["nosuch"],
    ["simulate", "--model", "nosuch"],
    ["simulate", "--set", "model.kind=foo"],
    ["simulate", "--set", "badformat"],
    ["simulate", "--config", "/does/not/exist.cfg"],
    ["error-experiment", "--N", "1001", "--n", "10"],
])
def test_validation_exit_1(args, tmp_path):
    assert run(*args, "--out", str(tmp_path)) == 1 if args != ["nosuch"] else run(*args) == 1


def test_malformed_config(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("no section header\n")
    assert run("simulate", "--config", str(cfg), "--out", str(tmp_path)) == 1
    cfg.write_text("[weird]\na = 1\n")
    assert run("simulate", "--config", str(cfg), "--out", str(tmp_path)) == 1


def test_unwritable_out_dir(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert run("simulate", "--model", "zero", "--out", str(blocker / "sub")) == 1


def test_runtime_error_exit_2(tmp_path):
    code = run("simulate", "--set", "model.mu=-5", "--set", "model.sigma=0.1", "--times", "100", "--n", "10",
               "--out", str(tmp_path))
    assert code == 2
    assert (tmp_path / "manifest.json").exists()  # written before the computation failed


def test_help_lists_schema(capsys):
    assert run("error-experiment", "--help") == 0
    out = capsys.readouterr().out
    assert "[experiment]" in out and "n_list" in out


def test_env_out_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("PSSMP_OUT_DIR", str(tmp_path / "env"))
    assert run("simulate", "--model", "zero") == 0
    assert (tmp_path / "env" / "manifest.json").exists()


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "pssmp", "simulate", "--model", "zero", "--x", "3", "--out", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == 0 and r.stdout.strip() == "X^(100)_1 = 3" or r.stdout.startswith("X^(")
