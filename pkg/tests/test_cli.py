import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from hyperseq import chebyshev_first
from hyperseq.cli import read_dense_matrix, resolve_seed, run, write_dense_matrix
from hyperseq.measures import SpectralMeasure, moments
from hyperseq.structmat import build_matrix, random_admissible_moments
from hyperseq.tables import read_csv, write_csv

GOLDEN = Path(__file__).parent / "golden"
LINEAR = '{"density": {"kind": "poly_pi", "params": {"coeffs": [1, 0.5]}}}'


@pytest.fixture(autouse=True)
def _no_env_seed(monkeypatch):
    monkeypatch.delenv("HYPERGROUP_SEED", raising=False)


def _call(capsys, *argv):
    code = run([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def _table(path):
    header, rows = read_csv(path)
    return header, np.array([[float(v) for v in r] for r in rows])


# ---------------------------------------------------------------- golden files
@pytest.mark.parametrize(
    "golden,argv",
    [
        ("simulate_white.csv", ["simulate", "--system", "chebyshev1", "--generator", "white", "--N", 10, "--seed", 7]),
        ("predict_chebyshev.csv", ["predict", "--system", "chebyshev1", "--measure", "pi", "--n-max", 16]),
        (
            "density_linear.csv",
            ["density", "--system", "chebyshev1", "--measure", LINEAR, "--N", 4, "--grid", 11, "--weights", "partial"],
        ),
    ],
)
def test_golden_outputs_are_byte_identical(tmp_path, capsys, golden, argv):
    out = tmp_path / golden
    code, _, _ = _call(capsys, *argv, "--out", out)
    assert code == 0
    assert out.read_bytes() == (GOLDEN / golden).read_bytes()


def test_golden_white_noise_values():
    _, T = _table(GOLDEN / "simulate_white.csv")
    expected = np.random.default_rng(7).standard_normal(11) * np.r_[1.0, np.full(10, math.sqrt(0.5))]
    np.testing.assert_allclose(T[:, 1], expected, rtol=1e-15)
    assert np.all(T[:, 2] == 0)


def test_golden_prediction_values():
    header, T = _table(GOLDEN / "predict_chebyshev.csv")
    assert header == ["n", "delta", "log_delta"]
    np.testing.assert_array_equal(T[:, 0], np.arange(17))
    np.testing.assert_allclose(T[:, 1], 1 / math.sqrt(2), atol=1e-10)
    np.testing.assert_allclose(T[:, 2], -0.5 * math.log(2), atol=1e-10)


def test_golden_density_values():
    _, T = _table(GOLDEN / "density_linear.csv")
    np.testing.assert_allclose(T[:, 0], np.linspace(-1, 1, 11), atol=1e-15)
    np.testing.assert_allclose(T[:, 1], 1 + 0.5 * T[:, 0], atol=1e-12)


# ---------------------------------------------------------------- seeds
def test_env_seed_overrides_flag(monkeypatch, capsys):
    base = _call(capsys, "simulate", "--N", 6, "--seed", 3)[1]
    monkeypatch.setenv("HYPERGROUP_SEED", "3")
    assert _call(capsys, "simulate", "--N", 6, "--seed", 99)[1] == base
    assert resolve_seed(99) == 3
    monkeypatch.setenv("HYPERGROUP_SEED", "-1")
    code, _, err = _call(capsys, "simulate", "--N", 6)
    assert code == 2 and "HYPERGROUP_SEED" in err


def test_default_seed_is_zero(capsys):
    assert resolve_seed(None) == 0
    assert _call(capsys, "simulate", "--N", 5)[1] == _call(capsys, "simulate", "--N", 5, "--seed", 0)[1]


@pytest.mark.parametrize("generator", ["white", "ma", "harmonic", "harmonic-demo", "stationary", "tree"])
def test_simulate_is_deterministic(capsys, generator):
    argv = ["simulate", "--generator", generator, "--N", 12, "--paths", 3, "--seed", 5, "--coef", "0.5,1"]
    if generator == "tree":
        argv += ["--system", '{"family": "cartier_dunau", "q": 2}']
    first, second = _call(capsys, *argv), _call(capsys, *argv)
    assert first[0] == 0 and first[1] == second[1]
    lines = first[1].splitlines()
    assert lines[0] == "path,n,re,im" and len(lines) == 1 + 3 * 13


# ---------------------------------------------------------------- subcommands
def test_periodogram_demo_peaks(tmp_path, capsys):
    out = tmp_path / "I.csv"
    code, _, err = _call(capsys, "periodogram", "--demo-harmonic", "--N", 25, "--grid", 101, "--out", out, "--expected")
    assert code == 0
    assert err.count("peak") == 4
    header, T = _table(out)
    assert header == ["x", "y", "re", "im"] and T.shape == (101 * 101, 4)
    V = T[:, 2].reshape(101, 101)
    x = T[::101, 0]
    for a in (-1 / 3, 0.5):
        i = int(np.argmin(np.abs(x - a)))
        # each diagonal atom is a local maximum of the expected periodogram
        assert V[i, i] == V[i - 3 : i + 4, i - 3 : i + 4].max()


def test_periodogram_from_path(tmp_path, capsys):
    path = tmp_path / "p.csv"
    write_csv(path, ("n", "re", "im"), [(n, 1.0, 0.0) for n in range(6)])
    code, out, _ = _call(capsys, "periodogram", "--path", path, "--N", 5, "--grid", 3)
    assert code == 0
    assert out.splitlines()[0] == "x,y,re,im" and len(out.splitlines()) == 10


def test_classify_json(capsys):
    code, out, _ = _call(capsys, "classify", "--system", "chebyshev1", "--measure", "pi", "--n-max", 64)
    assert code == 0
    report = json.loads(out)
    assert report["deterministic"] is False and report["criterion"] == "ks_bounded_haar"


def test_factor_and_solve(tmp_path, capsys):
    sys_ = chebyshev_first()
    n = 6
    M = build_matrix(random_admissible_moments(sys_, n, np.random.default_rng(1)), sys_, n).entries
    mpath, rhs, fpath = tmp_path / "M.csv", tmp_path / "b.csv", tmp_path / "F.csv"
    write_dense_matrix(str(mpath), M)
    np.testing.assert_array_equal(read_dense_matrix(str(mpath)), M)
    code, out, _ = _call(capsys, "factor", "--matrix", mpath, "--check", "--out", fpath)
    assert code == 0 and out.startswith("reconstruction residual")
    assert float(out.split()[-1]) < 1e-10
    header, F = _table(fpath)
    assert header[:3] == ["k", "D", "L0"] and F.shape == (n + 1, n + 3)
    L, D = F[:, 2:], F[:, 1]
    np.testing.assert_allclose(L.T @ np.diag(D) @ L @ M, np.eye(n + 1), atol=1e-9)

    b = np.arange(1.0, n + 2)
    write_csv(rhs, ("k", "b"), enumerate(b))
    code, out, err = _call(capsys, "solve", "--matrix", mpath, "--rhs", rhs)
    assert code == 0 and "relative residual" in err
    x = np.array([float(r.split(",")[1]) for r in out.splitlines()[1:]])
    np.testing.assert_allclose(M @ x, b, atol=1e-9)


def test_density_from_moment_file(tmp_path, capsys):
    sys_ = chebyshev_first()
    d = moments(SpectralMeasure(density_vs_pi=lambda x: 1 + x**2), sys_, 4)
    path = tmp_path / "d.csv"
    write_csv(path, ("k", "d"), enumerate(d))
    code, out, _ = _call(capsys, "density", "--moments", path, "--N", 4, "--grid", 5, "--weights", "partial")
    assert code == 0
    rows = np.array([[float(v) for v in r.split(",")] for r in out.splitlines()[1:]])
    np.testing.assert_allclose(rows[:, 1], 1 + rows[:, 0] ** 2, atol=1e-12)


def test_bench_output(capsys):
    code, out, _ = _call(capsys, "bench", "--n-list", "8,16", "--no-dense")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "n,ops_fast,ops_dense,t_fast_ns,t_dense_ns" and len(lines) == 3
    assert lines[1].split(",")[2] == "nan"


def test_kernel_check_cyclo_example(capsys):
    code, out, _ = _call(capsys, "kernel-check", "--cyclo-example", 2, "--N", 8, "--T", 2, "--tol", 1e-12)
    assert code == 0
    r = json.loads(out)
    assert r["positive_definite"] is True
    assert r["stationary"]["passed"] is False and r["stationary"]["residual"] == 8.0
    assert r["cyclostationary"]["passed"] is True


# ---------------------------------------------------------------- exit codes
def test_domain_error_exit_code(capsys):
    code, _, err = _call(capsys, "predict", "--system", '{"family": "jacobi", "alpha": -3, "beta": 0}', "--n-max", 4)
    assert code == 1
    assert err.startswith("ParameterOutOfRange:")


def test_domain_error_from_short_path(tmp_path, capsys):
    path = tmp_path / "p.csv"
    write_csv(path, ("n", "re", "im"), [(n, 1.0, 0.0) for n in range(3)])
    code, _, err = _call(capsys, "periodogram", "--path", path, "--N", 5, "--grid", 3)
    assert code == 1 and err.startswith("IndexOutOfRange:")


@pytest.mark.parametrize(
    "argv",
    [
        ["simulate"],
        ["simulate", "--N", "0"],
        ["simulate", "--N", "4", "--seed", "x"],
        ["teleport"],
        ["periodogram", "--N", "5"],
        ["factor", "--matrix", "/nonexistent.csv"],
        ["simulate", "--N", "4", "--measure", "{bad json", "--generator", "stationary"],
        ["kernel-check"],
    ],
)
def test_usage_errors_exit_two(capsys, argv):
    code, _, err = _call(capsys, *argv)
    assert code == 2
    assert err


def test_usage_error_lists_flags(capsys):
    code, _, err = _call(capsys, "simulate", "--bogus")
    assert code == 2
    assert "--N" in err or "usage" in err


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "hyperseq", "predict", "--measure", "pi", "--n-max", "2"],
        capture_output=True,
        text=True,
        check=False,
    )
    assert proc.returncode == 0
    assert proc.stdout.splitlines()[0] == "n,delta,log_delta"
    proc = subprocess.run([sys.executable, "-m", "hyperseq", "nope"], capture_output=True, text=True, check=False)
    assert proc.returncode == 2
