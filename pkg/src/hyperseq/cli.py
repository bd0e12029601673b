"""Command-line front end.

Every subcommand writes plot-ready CSV (17 significant digits) or JSON and
is deterministic for a fixed configuration and seed.  Exit codes: ``0``
success, ``1`` domain error (the error class name is printed to standard
error), ``2`` usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys as _sys
from typing import Any, Sequence

import numpy as np

from . import estimate, kernels, measures, predict, sequences, structmat
from .errors import DomainError
from .polysys import PolynomialSystem, from_descriptor
from .tables import read_csv, write_csv

SEED_ENV = "HYPERGROUP_SEED"


class UsageError(Exception):
    """Bad flags, unreadable inputs or malformed descriptors."""


# ----------------------------------------------------------------------
# argument helpers
# ----------------------------------------------------------------------
def _load_json_arg(text: str) -> Any:
    """A JSON literal, a path to a JSON file, or a bare name."""
    if os.path.isfile(text):
        with open(text, encoding="utf-8") as fh:
            return json.load(fh)
    stripped = text.strip()
    if stripped.startswith(("{", "[", '"')):
        try:
            return json.loads(stripped)
        except json.JSONDecodeError as exc:
            raise UsageError(f"invalid JSON: {exc}") from None
    return stripped


def _system(text: str) -> PolynomialSystem:
    return from_descriptor(_load_json_arg(text))


def _measure(text: str) -> measures.SpectralMeasure:
    try:
        return measures.measure_from_descriptor(_load_json_arg(text))
    except (KeyError, TypeError) as exc:
        raise UsageError(f"malformed measure descriptor: {exc}") from None


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None


def _positive(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError("sizes must be at least 1")
    return v


def _seed_value(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned value")
    return v


def resolve_seed(cli_seed: int | None) -> int:
    """``HYPERGROUP_SEED`` wins over ``--seed``; the default is ``0``."""
    env = os.environ.get(SEED_ENV)
    if env is not None and env.strip():
        try:
            return _seed_value(env.strip())
        except argparse.ArgumentTypeError as exc:
            raise UsageError(f"{SEED_ENV}: {exc}") from None
    return 0 if cli_seed is None else cli_seed


def _require_file(path: str) -> str:
    if not os.path.isfile(path):
        raise UsageError(f"no such file: {path}")
    return path


def _read_vector(path: str, columns: tuple[str, str]) -> np.ndarray:
    header, rows = read_csv(_require_file(path))
    if [h.strip() for h in header] != list(columns):
        raise UsageError(f"{path}: expected header {','.join(columns)}")
    out = np.zeros(len(rows))
    for r in rows:
        k = int(r[0])
        if not 0 <= k < len(rows):
            raise UsageError(f"{path}: index {k} out of range")
        out[k] = float(r[1])
    return out


def read_dense_matrix(path: str) -> np.ndarray:
    """Dense CSV: one header row (column labels), then one row per matrix row."""
    _, rows = read_csv(_require_file(path))
    try:
        M = np.array([[float(v) for v in r] for r in rows])
    except ValueError as exc:
        raise UsageError(f"{path}: {exc}") from None
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise UsageError(f"{path}: matrix must be square")
    return M


def write_dense_matrix(target, M: np.ndarray) -> None:
    write_csv(target, [f"c{j}" for j in range(M.shape[1])], M.tolist())


def _out_or_stdout(path: str | None):
    return path if path else _sys.stdout


# ----------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------
def cmd_simulate(args) -> int:
    seed = resolve_seed(args.seed)
    sys = _system(args.system)
    n_paths = args.paths if args.paths > 1 else None
    g = args.generator
    if g == "white":
        res = sequences.white_noise(sys, args.N, seed, n_paths)
    elif g == "ma":
        res = sequences.ma_sequence(sys, _floats(args.coef), args.N, seed, n_paths)
    elif g == "harmonic":
        atoms = _floats(args.atoms)
        res = sequences.harmonic_sequence(sys, atoms, np.eye(len(atoms)), args.N, seed, n_paths)
    elif g == "harmonic-demo":
        res = sequences.harmonic_demo(sys, args.N, seed, n_paths)
    elif g == "stationary":
        res = sequences.stationary_sequence(sys, _measure(args.measure), args.N, seed, n_paths)
    else:
        res = sequences.radial_tree_sequence(args.q, _measure(args.measure), args.N, seed, n_paths)
    target = _out_or_stdout(args.out)
    if isinstance(res, sequences.Path):
        res.to_csv(target)
    else:
        V = res.values.astype(complex)
        rows = ((p, n, V[p, n].real, V[p, n].imag) for p in range(V.shape[0]) for n in range(V.shape[1]))
        write_csv(target, ("path", "n", "re", "im"), rows)
    return 0


def _peak_report(grid: estimate.Grid2, atoms: Sequence[float]) -> None:
    for a in atoms:
        for b in atoms:
            i, j = grid.nearest_index(a, b)
            print(
                f"peak x={grid.x[i]:.6g} y={grid.y[j]:.6g} |I|={abs(grid.values[i, j]):.6g}",
                file=_sys.stderr,
            )


def cmd_periodogram(args) -> int:
    sys = _system(args.system)
    if args.demo_harmonic == bool(args.path):
        raise UsageError("give exactly one of --demo-harmonic or --path")
    if args.demo_harmonic:
        atoms = sequences.HARMONIC_DEMO_ATOMS
        if args.expected:
            mu2 = measures.BiMeasure.from_covariance(atoms, np.eye(len(atoms)))
            grid = estimate.expected_periodogram(mu2, sys, args.N, args.grid)
        else:
            seed = resolve_seed(args.seed)
            n_paths = args.paths if args.paths > 1 else None
            data = sequences.harmonic_demo(sys, args.N, seed, n_paths)
            grid = estimate.periodogram(data, sys, args.N, args.grid)
        _peak_report(grid, atoms)
    else:
        if args.expected:
            raise UsageError("--expected needs --demo-harmonic")
        data = sequences.Path.from_csv(_require_file(args.path))
        grid = estimate.periodogram(data, sys, args.N, args.grid)
    grid.to_csv(_out_or_stdout(args.out))
    return 0


def cmd_density(args) -> int:
    sys = _system(args.system)
    if bool(args.moments) == bool(args.measure):
        raise UsageError("give exactly one of --moments or --measure")
    if args.moments:
        d = _read_vector(args.moments, ("k", "d"))
    else:
        d = measures.moments(_measure(args.measure), sys, args.N)
    nodes = estimate.grid_nodes(sys, args.grid)
    f = estimate.density_estimate(d, sys, args.N, nodes, args.weights)
    write_csv(_out_or_stdout(args.out), ("x", "f"), zip(nodes, f))
    return 0


def cmd_predict(args) -> int:
    sys = _system(args.system)
    if args.moments:
        d = _read_vector(args.moments, ("k", "d"))
    else:
        d = measures.moments(_measure(args.measure), sys, 2 * args.n_max + 2)
    log_delta = predict.log_error_curve_from_moments(d, sys, args.n_max)
    rows = ((n, math.exp(v), v) for n, v in enumerate(log_delta))
    write_csv(_out_or_stdout(args.out), ("n", "delta", "log_delta"), rows)
    return 0


def cmd_classify(args) -> int:
    report = predict.classify_determinism(_system(args.system), _measure(args.measure), args.n_max)
    text = json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        _sys.stdout.write(text)
    return 0


def cmd_factor(args) -> int:
    sys = _system(args.system)
    M = structmat.StructuredMatrix(read_dense_matrix(args.matrix))
    fac = structmat.ldl_decompose(M, sys)
    if args.check:
        resid = np.abs(fac.inverse() @ M.entries - np.eye(M.n + 1)).max()
        print(f"reconstruction residual {resid:.3e}")
    if args.out:
        L = fac.L
        D = fac.D
        header = ["k", "D"] + [f"L{j}" for j in range(M.n + 1)]
        write_csv(args.out, header, ([k, D[k], *L[k]] for k in range(M.n + 1)))
    return 0


def cmd_solve(args) -> int:
    sys = _system(args.system)
    M = structmat.StructuredMatrix(read_dense_matrix(args.matrix))
    b = _read_vector(args.rhs, ("k", "b"))
    if b.size != M.n + 1:
        raise UsageError(f"right-hand side has {b.size} entries, matrix order is {M.n + 1}")
    x = structmat.solve(M, sys, b)
    resid = np.abs(M.entries @ x - b).max() / max(np.abs(b).max(), 1e-300)
    print(f"relative residual {resid:.3e}", file=_sys.stderr)
    write_csv(_out_or_stdout(args.out), ("k", "x"), enumerate(x))
    return 0


def cmd_bench(args) -> int:
    rows = structmat.bench(_ints(args.n_list), _load_json_arg(args.system), resolve_seed(args.seed), dense=not args.no_dense)
    cols = ("n", "ops_fast", "ops_dense", "t_fast_ns", "t_dense_ns")
    write_csv(_out_or_stdout(args.out), cols, ([r[c] for c in cols] for r in rows))
    return 0


def cmd_kernel_check(args) -> int:
    sys = _system(args.system)
    if (args.kernel is None) == (args.cyclo_example is None):
        raise UsageError("give exactly one of --kernel or --cyclo-example")
    if args.kernel:
        K = kernels.Kernel.from_table(sys, kernels.read_kernel_table(_require_file(args.kernel)))
    else:
        K = kernels.cyclo_example(args.cyclo_example, sys)
    result: dict[str, Any] = {
        "N": args.N,
        "positive_definite": kernels.is_positive_definite_kernel(K, args.N, args.tol),
        "min_eigenvalue": kernels.kernel_min_eigenvalue(K, args.N),
    }
    st = kernels.check_stationary(K, args.N, args.tol)
    result["stationary"] = {"passed": st.passed, "residual": st.residual, "witness": st.witness}
    if args.T is not None:
        cy = kernels.check_cyclostationary(K, args.T, args.N, args.tol)
        result["cyclostationary"] = {"T": args.T, "passed": cy.passed, "residual": cy.residual, "witness": cy.witness}
    text = json.dumps(result, indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        _sys.stdout.write(text)
    return 0


# ----------------------------------------------------------------------
# parser
# ----------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hyperseq", description="Random sequences indexed by polynomial hypergroups.")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name: str, fn, help_text: str, system: bool = True) -> argparse.ArgumentParser:
        sp = sub.add_parser(name, help=help_text, description=help_text)
        sp.set_defaults(func=fn)
        if system:
            sp.add_argument("--system", default="chebyshev1", help="family name, JSON descriptor or JSON file")
        sp.add_argument("--out", help="output file (default: standard output)")
        return sp

    s = add("simulate", cmd_simulate, "simulate sample paths")
    s.add_argument("--generator", choices=["white", "ma", "harmonic", "harmonic-demo", "stationary", "tree"], default="white")
    s.add_argument("--N", type=_positive, required=True)
    s.add_argument("--paths", type=_positive, default=1)
    s.add_argument("--coef", default="1", help="MA coefficients a_0,..,a_q")
    s.add_argument("--atoms", default="-0.3333333333333333,0.5")
    s.add_argument("--measure", default="pi")
    s.add_argument("--q", type=float, default=2.0, help="tree degree for --generator tree")
    s.add_argument("--seed", type=_seed_value)

    s = add("periodogram", cmd_periodogram, "two-dimensional periodogram on a grid")
    s.add_argument("--demo-harmonic", action="store_true", help="use the two-atom harmonic demo process")
    s.add_argument("--path", help="path CSV (n,re,im)")
    s.add_argument("--N", type=_positive, required=True)
    s.add_argument("--grid", type=_positive, default=101)
    s.add_argument("--paths", type=_positive, default=1, help="average over this many demo paths")
    s.add_argument("--expected", action="store_true", help="write the expected periodogram instead")
    s.add_argument("--seed", type=_seed_value)

    s = add("density", cmd_density, "spectral density estimate from moments")
    s.add_argument("--moments", help="moment CSV (k,d)")
    s.add_argument("--measure")
    s.add_argument("--N", type=_positive, required=True)
    s.add_argument("--grid", type=_positive, default=201)
    s.add_argument("--weights", choices=["fejer", "partial"], default="fejer")

    s = add("predict", cmd_predict, "one-step prediction error curve")
    s.add_argument("--measure", default="pi")
    s.add_argument("--moments", help="moment CSV (k,d) instead of --measure")
    s.add_argument("--n-max", type=_positive, required=True)

    s = add("classify", cmd_classify, "asymptotic determinism report (JSON)")
    s.add_argument("--measure", default="pi")
    s.add_argument("--n-max", type=int, default=256)

    s = add("factor", cmd_factor, "fast inverse factorization of a structured matrix")
    s.add_argument("--matrix", required=True, help="dense matrix CSV")
    s.add_argument("--check", action="store_true", help="print the reconstruction residual")

    s = add("solve", cmd_solve, "solve M x = b with the fast factorization")
    s.add_argument("--matrix", required=True)
    s.add_argument("--rhs", required=True, help="right-hand side CSV (k,b)")

    s = add("bench", cmd_bench, "operation counts and timings of the factorizations")
    s.add_argument("--n-list", default="128,256,512,1024")
    s.add_argument("--no-dense", action="store_true", help="skip the cubic reference factorization")
    s.add_argument("--seed", type=_seed_value)

    s = add("kernel-check", cmd_kernel_check, "positive definiteness and (cyclo)stationarity of a kernel (JSON)")
    s.add_argument("--kernel", help="kernel CSV (n,m,re,im)")
    s.add_argument("--cyclo-example", type=float, metavar="C", help="use the two-atom cyclostationary example")
    s.add_argument("--N", type=_positive, default=8)
    s.add_argument("--T", type=_positive)
    s.add_argument("--tol", type=float, default=1e-10)
    return p


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except DomainError as exc:
        print(f"{type(exc).__name__}: {exc}", file=_sys.stderr)
        return 1
    except (UsageError, OSError, ValueError) as exc:
        print(f"usage error: {exc}", file=_sys.stderr)
        return 2


def main() -> None:
    _sys.exit(run())
