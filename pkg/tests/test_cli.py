import json
import subprocess
import sys

import numpy as np
import pytest
from numpy.testing import assert_allclose

from streampod.cli import main
from streampod.io import read_mass_matrix, read_snapshots

N, STEPS = 12, 24


def _data_args(d):
    return ["--mass", str(d / "mass.mtx"), "--snapshots", str(d / "snapshots.csv"),
            "--times", str(d / "times.txt")]


@pytest.fixture
def dataset(tmp_path):
    d = tmp_path / "data"
    assert main(["gen", "--n", str(N), "--steps", str(STEPS), "--seed", "7", "--out", str(d)]) == 0
    return d


def test_gen_files_consistent(dataset):
    M = read_mass_matrix(dataset / "mass.mtx")
    ds = read_snapshots(dataset / "snapshots.csv", dataset / "times.txt", M)
    assert (ds.m, ds.s) == (N - 1, STEPS)
    assert_allclose(ds.grid.T, 1.0)


def test_gen_deterministic(tmp_path):
    outs = []
    for name in ("a", "b"):
        assert main(["gen", "--n", "8", "--steps", "5", "--seed", "3", "--grid", "geometric",
                     "--out", str(tmp_path / name)]) == 0
        outs.append({p.name: p.read_bytes() for p in (tmp_path / name).iterdir()})
    assert outs[0] == outs[1]


def test_gen_rejects_one_element(tmp_path, capsys):
    assert main(["gen", "--n", "1", "--out", str(tmp_path / "x")]) == 1
    assert "n=1" in capsys.readouterr().err


def test_gen_binary(tmp_path):
    d = tmp_path / "bin"
    assert main(["gen", "--n", "6", "--steps", "4", "--format", "bin", "--out", str(d)]) == 0
    out = tmp_path / "out"
    args = ["run", "--mass", str(d / "mass.mtx"), "--snapshots", str(d / "snapshots.bin"),
            "--times", str(d / "times.txt"), "--prefetch", "2", "--out", str(out)]
    assert main(args) == 0
    assert json.loads((out / "summary.json").read_text())["s"] == 4


@pytest.mark.parametrize("variant", ["one-weight", "two-weight"])
def test_run_populates_output(dataset, tmp_path, variant):
    out = tmp_path / "out"
    assert main(["run", "--variant", variant, *_data_args(dataset), "--tol", "1e-10",
                 "--out", str(out)]) == 0
    for name in ("singular_values.csv", "modes.csv", "temporal.csv", "summary.json"):
        assert (out / name).exists()
    summary = json.loads((out / "summary.json").read_text())
    assert summary["variant"] == variant
    assert summary["orth_defect_V"] < 1e-10
    assert sum(summary["branches"].values()) == STEPS - 1


def test_run_zero_first_column(tmp_path, capsys):
    (tmp_path / "m.mtx").write_text("%%MatrixMarket matrix array real general\n2 2\n1\n0\n0\n1\n")
    (tmp_path / "u.csv").write_text("0,1\n0,1\n")
    (tmp_path / "t.txt").write_text("0 1 2\n")
    rc = main(["run", "--mass", str(tmp_path / "m.mtx"), "--snapshots", str(tmp_path / "u.csv"),
               "--times", str(tmp_path / "t.txt"), "--out", str(tmp_path / "out")])
    assert rc == 1
    assert "cannot initialize from zero data" in capsys.readouterr().err


def test_run_without_right_vectors(dataset, tmp_path):
    out = tmp_path / "out"
    assert main(["run", *_data_args(dataset), "--no-right-vectors", "--out", str(out)]) == 0
    assert not (out / "temporal.csv").exists()
    assert json.loads((out / "summary.json").read_text())["orth_defect_W"] is None


def test_run_missing_file(dataset, tmp_path, capsys):
    args = _data_args(dataset)
    args[3] = str(tmp_path / "missing.csv")
    assert main(["run", *args, "--out", str(tmp_path / "o")]) == 1
    assert capsys.readouterr().err


def test_run_bad_tolerance(dataset, tmp_path):
    assert main(["run", *_data_args(dataset), "--tol", "-1", "--out", str(tmp_path / "o")]) == 1


def test_usage_error_exits_one(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["run"])
    assert exc.value.code == 1


def test_compare_defaults(dataset, capsys):
    assert main(["compare", *_data_args(dataset)]) == 0
    assert "sigma_vs_oracle[one-weight]" in capsys.readouterr().out


def test_compare_aggressive_truncation(dataset):
    from streampod import batch_core_svd_two_weight
    M = read_mass_matrix(dataset / "mass.mtx")
    ds = read_snapshots(dataset / "snapshots.csv", dataset / "times.txt", M)
    s1 = batch_core_svd_two_weight(ds.matrix(), M, ds.grid).S[0]
    assert main(["compare", *_data_args(dataset), "--tol-sv", repr(float(s1) / 2)]) == 0


def test_compare_against_stored_run(dataset, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", *_data_args(dataset), "--out", str(out)]) == 0
    assert main(["compare", *_data_args(dataset), "--against", str(out)]) == 0
    T = np.loadtxt(out / "temporal.csv", delimiter=",", ndmin=2)
    T[:, 0] *= 2.0
    np.savetxt(out / "temporal.csv", T, delimiter=",", fmt="%.17g")
    capsys.readouterr()
    assert main(["compare", *_data_args(dataset), "--against", str(out)]) == 2
    assert "stored_temporal" in capsys.readouterr().err


def test_oracle_diagonal(tmp_path, capsys):
    (tmp_path / "m.mtx").write_text("%%MatrixMarket matrix array real general\n2 2\n1\n0\n0\n1\n")
    (tmp_path / "u.csv").write_text("1,0\n0,-3\n")
    (tmp_path / "t.txt").write_text("0 4 5\n")
    out = tmp_path / "out"
    rc = main(["oracle", "--mass", str(tmp_path / "m.mtx"), "--snapshots", str(tmp_path / "u.csv"),
               "--times", str(tmp_path / "t.txt"), "--out", str(out)])
    assert rc == 0
    sigma = np.loadtxt(out / "singular_values.csv", delimiter=",", skiprows=1)[:, 1]
    assert_allclose(sigma, sorted([1.0 * 2.0, 3.0 * 1.0], reverse=True))
    assert json.loads((out / "verify.json").read_text())["passed"] is True


@pytest.mark.parametrize("variant", ["one-weight", "two-weight"])
def test_oracle_verifies(dataset, tmp_path, variant):
    out = tmp_path / "out"
    assert main(["oracle", *_data_args(dataset), "--variant", variant, "--out", str(out)]) == 0
    assert json.loads((out / "verify.json").read_text())["passed"] is True


def test_oracle_non_spd(tmp_path, capsys):
    (tmp_path / "m.mtx").write_text("%%MatrixMarket matrix array real general\n2 2\n1\n2\n2\n1\n")
    (tmp_path / "u.csv").write_text("1,0\n0,1\n")
    (tmp_path / "t.txt").write_text("0 1 2\n")
    rc = main(["oracle", "--mass", str(tmp_path / "m.mtx"), "--snapshots", str(tmp_path / "u.csv"),
               "--times", str(tmp_path / "t.txt"), "--out", str(tmp_path / "o")])
    assert rc == 1
    assert "not positive definite" in capsys.readouterr().err


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "streampod", "gen", "--n", "4", "--steps", "3",
                           "--out", str(tmp_path / "d")], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert (tmp_path / "d" / "mass.mtx").exists()
