import json

import numpy as np
import pytest

from kmac.cli import main
from kmac.estimators import eta_hat
from kmac.geograph import GraphSpec
from kmac.io import load_csv, read_table, write_matrix
from kmac.kernels import KernelSpec


@pytest.fixture
def pair(tmp_path):
    rng = np.random.default_rng(0)
    x = rng.normal(size=(120, 2))
    y = np.sin(2 * x[:, :1]) + 0.3 * rng.normal(size=(120, 1))
    write_matrix(x, tmp_path / "x.csv")
    write_matrix(y, tmp_path / "y.csv")
    return tmp_path / "x.csv", tmp_path / "y.csv", x, y


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_compute_matches_library(capsys, pair):
    xp, yp, x, y = pair
    code, out, _ = run(capsys, "compute", "--x", xp, "--y", yp, "--json")
    assert code == 0
    got = json.loads(out)
    ref = eta_hat(x, y, KernelSpec("distance", alpha=1.0), GraphSpec("knn", k=1).build(x))
    assert got["value"] == ref.value
    assert got["kind"] == "standard"


@pytest.mark.parametrize("estimator", ["linear", "rank"])
def test_compute_other_kinds(capsys, pair, estimator):
    xp, yp, _, _ = pair
    code, out, _ = run(capsys, "compute", "--x", xp, "--y", yp, "--estimator", estimator,
                       "--kernel", "gaussian:sigma=0.5", "--graph", "mst")
    assert code == 0
    assert f"kind: {estimator}" in out


def test_test_command_both_methods(capsys, pair):
    xp, yp, _, _ = pair
    code, out, _ = run(capsys, "test", "--x", xp, "--y", yp, "--json")
    assert code == 0 and json.loads(out)["reject"] is True
    code, out, _ = run(capsys, "test", "--x", xp, "--y", yp, "--method", "perm", "--B", "199",
                       "--seed", "1", "--json")
    rep = json.loads(out)
    assert code == 0 and rep["method"] == "permutation-standard(B=199)"
    assert rep["p_value"] == pytest.approx(1 / 200)


def test_noncharacteristic_kernel_warns(capsys, pair):
    xp, yp, _, _ = pair
    code, _, err = run(capsys, "test", "--x", xp, "--y", yp, "--kernel", "linear")
    assert code == 0
    assert "not characteristic" in err


def test_exit_codes(capsys, pair, tmp_path):
    xp, yp, x, _ = pair
    code, _, err = run(capsys, "test", "--x", xp, "--y", yp, "--method", "perm")
    assert code == 2 and "--seed" in err
    assert run(capsys, "compute", "--x", xp, "--y", yp, "--kernel", "cosine")[0] == 2
    assert run(capsys, "compute", "--x", xp, "--y", yp, "--graph", "knn:k=0")[0] == 2
    write_matrix(np.ones((120, 1)), tmp_path / "c.csv")
    assert run(capsys, "compute", "--x", xp, "--y", tmp_path / "c.csv")[0] == 3
    write_matrix(x[:50], tmp_path / "short.csv")
    assert run(capsys, "compute", "--x", tmp_path / "short.csv", "--y", yp)[0] == 2


def test_simulate_writes_files(capsys, tmp_path):
    code, out, _ = run(capsys, "simulate", "--setting", "sinusoidal", "--lambda", "0.2",
                       "--n", "40", "--seed", "3", "--out", tmp_path / "sim", "--json")
    assert code == 0
    assert json.loads(out)["n"] == 40
    assert load_csv(tmp_path / "sim" / "x.csv").shape == (40, 2)


def test_experiment_commands_write_tables(capsys, tmp_path):
    out = tmp_path / "qq.json"
    assert run(capsys, "qq-null", "--n", "60", "--reps", "200", "--seed", "1", "--out", out)[0] == 0
    assert read_table(out).n_rows == 200
    code, text, _ = run(capsys, "loglog", "--n-grid", "64,128", "--reps", "10", "--boot", "50",
                        "--seed", "1")
    assert code == 0 and "slopes" in text
    out = tmp_path / "power.csv"
    code, _, _ = run(capsys, "power", "--lambdas", "0.5", "--n", "40", "--reps", "3", "--B", "19",
                     "--seed", "2", "--baselines", "none", "--config", "standard+distance+knn:k=1",
                     "--out", out)
    assert code == 0 and list(read_table(out).columns) == ["lambda", "power_standard_distance_1nn"]
    code, text, _ = run(capsys, "coeff-curve", "--grid", "0,1", "--n", "50", "--reps", "2",
                        "--seed", "1", "--json")
    assert code == 0 and json.loads(text)["columns"]["lambda"] == [0.0, 1.0]
