"""Gram matrices ``[int P_k P_l dmu]`` and their fast inverse factorization.

A matrix with entries ``d(k, l) = sum_s g(k, l, s) d(s)`` is determined by
the moments ``d(0) .. d(2n)``, which can be peeled off its last row.  From
the moments, the modified Chebyshev algorithm and the connection
recursion give

    M^{-1} = L^T D L,   L[k, l] = c_{phi P}(k, l),   D_k = 1 / ||phi_k||^2,

in ``O(n^2)`` operations.  ``L`` is stored as a unit lower triangle plus
log row scales, so the factors stay representable for large ``n``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .errors import IndexOutOfRange, InconsistentMatrix
from .hyperconv import LinearizationRows, haar_weights, iter_linearization_rows
from .measures import SpectralMeasure, moments as measure_moments, orthogonalization_measure
from .opseq import OpCounter, _count, connection_from_measure, modified_chebyshev
from .polysys import PolynomialSystem, from_descriptor

STRUCTURE_TOL = 1e-10


@dataclass(frozen=True)
class StructuredMatrix:
    """Symmetric ``(n+1) x (n+1)`` matrix ``d(k, l) = int P_k P_l dmu``."""

    entries: np.ndarray
    moments: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.entries.shape[0] - 1


@dataclass(frozen=True)
class LdlFactors:
    """``M^{-1} = L^T D L`` with ``L = diag(exp(log_l_diag)) U``.

    ``U`` is unit lower triangular.  ``L`` rows hold ``c_{phi P}(k, .)`` and
    ``D_k = 1 / (sigma_{k,k} c_{phi P}(k, k))``.
    """

    U: np.ndarray
    log_l_diag: np.ndarray
    log_D: np.ndarray

    @property
    def n(self) -> int:
        return self.U.shape[0] - 1

    @property
    def L(self) -> np.ndarray:
        return self.U * np.exp(self.log_l_diag)[:, None]

    @property
    def D(self) -> np.ndarray:
        return np.exp(self.log_D)

    @property
    def unit_diag(self) -> np.ndarray:
        """Diagonal ``Delta`` of the unit-triangular form ``M^{-1} = U^T Delta U``."""
        return np.exp(2.0 * self.log_l_diag + self.log_D)

    def inverse(self) -> np.ndarray:
        return self.U.T @ (self.unit_diag[:, None] * self.U)

    def apply_inverse(self, b, counter: OpCounter | None = None) -> np.ndarray:
        b = np.asarray(b)
        n1 = self.U.shape[0]
        _count(counter, n1 * n1 + n1)
        return self.U.T @ (self.unit_diag * (self.U @ b))


# ----------------------------------------------------------------------
# construction and moment recovery
# ----------------------------------------------------------------------
def _is_chebyshev_first(sys: PolynomialSystem) -> bool:
    return sys.family == "ChebyshevFirst"


def build_matrix(d, sys: PolynomialSystem, n: int) -> StructuredMatrix:
    """Entries ``d(k, l) = sum_s g(k, l, s) d(s)`` for ``k, l <= n``.

    For Chebyshev polynomials of the first kind the Toeplitz-plus-Hankel
    form ``(d(|k-l|) + d(k+l)) / 2`` is used directly.
    """
    d = np.asarray(d, dtype=float)
    if d.shape[0] < 2 * n + 1:
        raise IndexOutOfRange(f"an order-{n} matrix needs moments 0..{2 * n}, got {d.shape[0]}")
    d = d[: 2 * n + 1]
    if _is_chebyshev_first(sys):
        k = np.arange(n + 1)
        M = 0.5 * (d[np.abs(k[:, None] - k[None, :])] + d[k[:, None] + k[None, :]])
        return StructuredMatrix(M, d.copy())
    M = np.empty((n + 1, n + 1))
    for k in range(n + 1):
        for l, row in iter_linearization_rows(sys, k, k):
            v = row[k - l :] @ d[k - l : k + l + 1]
            M[k, l] = M[l, k] = v
    return StructuredMatrix(M, d.copy())


def moments_from_matrix(
    M: StructuredMatrix | np.ndarray,
    sys: PolynomialSystem,
    counter: OpCounter | None = None,
    check: bool = True,
    tol: float = STRUCTURE_TOL,
) -> np.ndarray:
    """Recover ``d(0) .. d(2n)`` from a structured matrix.

    The first column gives ``d(0) .. d(n)``; the last row then yields

        d(n + k) = (d(n, k) - sum_{s=n-k}^{n+k-1} g(n, k, s) d(s)) / g(n, k, n + k).

    With ``check`` the matrix is rebuilt from the recovered moments and
    :class:`InconsistentMatrix` is raised if it differs by more than
    ``tol`` relative to the largest entry.
    """
    E = M.entries if isinstance(M, StructuredMatrix) else np.asarray(M, dtype=float)
    if E.ndim != 2 or E.shape[0] != E.shape[1]:
        raise InconsistentMatrix("matrix must be square")
    n = E.shape[0] - 1
    d = np.zeros(2 * n + 1)
    d[: n + 1] = E[:, 0]
    if n >= 1:
        rows = LinearizationRows(sys, n)
        for k in range(1, n + 1):
            rows.extend(k)
            g = rows.rows[k]
            acc = g[n - k : n + k] @ d[n - k : n + k]
            d[n + k] = (E[n, k] - acc) / g[n + k]
            _count(counter, 2 * k + 1)
            # the recurrence for row k + 1 only needs rows k and k - 1
            if k >= 2:
                rows.rows[k - 2] = None  # type: ignore[call-overload]
        _count(counter, 6 * n * n)  # producing the rows g(n, k, .) themselves
    if check:
        scale = max(float(np.abs(E).max()), 1e-300)
        rebuilt = build_matrix(d, sys, n).entries
        resid = float(np.abs(rebuilt - E).max())
        if resid > tol * scale:
            raise InconsistentMatrix(
                f"matrix is not moment-structured: residual {resid:.3e} exceeds {tol:.0e} x {scale:.3e}"
            )
    return d


# ----------------------------------------------------------------------
# fast factorization
# ----------------------------------------------------------------------
def ldl_decompose(
    M: StructuredMatrix | np.ndarray,
    sys: PolynomialSystem,
    counter: OpCounter | None = None,
    check: bool = True,
) -> LdlFactors:
    """``O(n^2)`` factorization ``M^{-1} = L^T D L``.

    Three passes: moment extraction from the matrix, the mixed-moment
    recursion, and the connection recursion.  Raises
    :class:`~hyperseq.errors.MeasureDegenerate` (with the completed depth)
    when ``M`` is numerically singular.
    """
    d = moments_from_matrix(M, sys, counter=counter, check=check)
    n = (d.shape[0] - 1) // 2
    chain = modified_chebyshev(d, sys, n, counter=counter)
    conn = connection_from_measure(chain, sys, n, counter=counter)
    log_l = conn.log_scale
    log_D = -(chain.log_sigma_diag[: n + 1] - chain.log_sigma_pi[: n + 1])
    return LdlFactors(conn.values, log_l, log_D)


def solve(
    M: StructuredMatrix | np.ndarray,
    sys: PolynomialSystem,
    b,
    factors: LdlFactors | None = None,
    counter: OpCounter | None = None,
) -> np.ndarray:
    """Solve ``M x = b`` as ``x = L^T (D (L b))``."""
    if factors is None:
        factors = ldl_decompose(M, sys, counter=counter)
    return factors.apply_inverse(b, counter=counter)


def brute_force_factor(
    M: StructuredMatrix | np.ndarray, sys: PolynomialSystem | None = None, counter: OpCounter | None = None
) -> LdlFactors:
    """Dense ``O(n^3)`` reference for :func:`ldl_decompose`.

    Factors ``M = T Dt T^T`` (unit lower ``T``) by outer-product
    elimination, inverts ``T`` by forward substitution, and returns
    ``U = T^{-1}``, ``Delta = 1 / Dt``.  When ``sys`` is given, the row
    scales are set to ``1 / sigma_k(pi)`` so the result is directly
    comparable with the fast factors.
    """
    E = M.entries if isinstance(M, StructuredMatrix) else np.asarray(M, dtype=float)
    A = np.array(E, dtype=float, copy=True)
    n1 = A.shape[0]
    T = np.eye(n1)
    Dt = np.empty(n1)
    for j in range(n1):
        Dt[j] = A[j, j]
        if Dt[j] <= 0:
            raise np.linalg.LinAlgError(f"matrix not positive definite at pivot {j}")
        col = A[j + 1 :, j] / Dt[j]
        T[j + 1 :, j] = col
        A[j + 1 :, j + 1 :] -= np.outer(col, A[j, j + 1 :])
        m = n1 - j - 1
        _count(counter, m + m * m)
    U = np.eye(n1)
    for i in range(1, n1):
        U[i, :i] = -T[i, :i] @ U[:i, :i]
        _count(counter, i * i)
    log_delta = -np.log(Dt)
    if sys is None:
        return LdlFactors(U, np.zeros(n1), log_delta)
    log_l = -sys.leading_coefficient_logs(n1 - 1)
    return LdlFactors(U, log_l, log_delta - 2.0 * log_l)


# ----------------------------------------------------------------------
# test inputs and benchmark
# ----------------------------------------------------------------------
def random_admissible_measure(sys: PolynomialSystem, rng: np.random.Generator, n_atoms: int = 6) -> SpectralMeasure:
    """``w pi + sum m_j delta_{x_j}`` with random weights and atoms inside ``supp pi``."""
    lo, hi = sys.pi_support
    xs = rng.uniform(lo, hi, n_atoms)
    masses = rng.uniform(0.05, 1.0, n_atoms) / n_atoms
    w = rng.uniform(0.5, 1.5)
    return orthogonalization_measure(w) + SpectralMeasure(atoms=tuple(zip(xs, masses)))


def random_admissible_moments(sys: PolynomialSystem, n: int, rng: np.random.Generator) -> np.ndarray:
    """Moments ``d(0) .. d(2n)`` of :func:`random_admissible_measure`."""
    return measure_moments(random_admissible_measure(sys, rng), sys, 2 * n)


def bench(
    n_list,
    sys: PolynomialSystem | str | dict = "chebyshev1",
    seed: int = 0,
    dense: bool = True,
) -> list[dict[str, float]]:
    """Operation counts and wall times of the fast and dense factorizations."""
    if not isinstance(sys, PolynomialSystem):
        sys = from_descriptor(sys)
    rng = np.random.default_rng(seed)
    out = []
    for n in n_list:
        d = random_admissible_moments(sys, n, rng)
        M = build_matrix(d, sys, n)
        fast = OpCounter()
        t0 = time.perf_counter_ns()
        ldl_decompose(M, sys, counter=fast, check=False)
        t_fast = time.perf_counter_ns() - t0
        row = {"n": n, "ops_fast": fast.ops, "t_fast_ns": t_fast, "ops_dense": math.nan, "t_dense_ns": math.nan}
        if dense:
            slow = OpCounter()
            t0 = time.perf_counter_ns()
            brute_force_factor(M, sys, counter=slow)
            row["t_dense_ns"] = time.perf_counter_ns() - t0
            row["ops_dense"] = slow.ops
        out.append(row)
    return out


def fitted_exponent(ns, values) -> float:
    """Least-squares slope of ``log(values)`` against ``log(ns)``."""
    return float(np.polyfit(np.log(np.asarray(ns, dtype=float)), np.log(np.asarray(values, dtype=float)), 1)[0])


def pi_gram_diagonal(sys: PolynomialSystem, n: int) -> np.ndarray:
    """``diag(1 / h(k))``, the Gram matrix of ``pi`` itself."""
    return np.diag(1.0 / haar_weights(sys, n))
