"""Monic orthogonal polynomials of a spectral measure, built from its moments.

Given modified moments ``d(l) = int P_l dmu`` the modified Chebyshev
algorithm produces the recurrence

    x phi_k = phi_{k+1} + alpha_k phi_k + beta_k phi_{k-1}

of the monic polynomials orthogonal for ``mu``, along with the mixed
moments ``sigma_{k,l} = int phi_k P_l dmu``.  The connection coefficients
``c(k, l)`` in ``phi_k = sum_l c(k, l) P_l`` then follow from a four-term
recursion.

Both recursions run on row-normalized quantities: row ``k`` of the mixed
moments is stored divided by ``sigma_{k,k}`` and row ``k`` of the
connection triangle divided by its diagonal ``1 / sigma_k(pi)``, with the
logarithms of the scale factors carried alongside.  Algebraically this is
the plain recursion; numerically it avoids the under/overflow that
``sigma_{k,k} ~ 2^{-k}`` would cause beyond a few hundred steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import IndexOutOfRange, MeasureDegenerate
from .polysys import PolynomialSystem

# A step is degenerate when beta_k collapses relative to the reference
# value A_{k-1} C_k of the system's own measure, or when the accumulated
# ratio ||phi_k||^2 / (d(0) ||phi_k||_pi^2) falls below 1e-250.
STEP_TOL = 1e-12
CUMULATIVE_LOG_TOL = math.log(1e-250)


class OpCounter:
    """Counts arithmetic operations (one multiply-add counts as one)."""

    def __init__(self) -> None:
        self.ops = 0

    def add(self, n: int) -> None:
        self.ops += int(n)


def _count(counter: OpCounter | None, n: int) -> None:
    if counter is not None:
        counter.add(n)


@dataclass(frozen=True)
class MonicChain:
    """Recurrence of the monic orthogonal polynomials of ``mu``.

    Attributes
    ----------
    n : int
        Depth: ``alpha_k``, ``beta_k`` are known for ``k < n``.
    alpha, beta : ndarray
        Recurrence coefficients (``beta[0] = 0`` by convention).
    rows : list of ndarray
        ``rows[k][j] = sigma_{k,k+j} / sigma_{k,k}``.
    log_sigma_diag : ndarray
        ``ln sigma_{k,k}`` for every computed row (``n`` or ``n + 1`` rows).
    log_sigma_pi : ndarray
        ``ln sigma_k(pi)``, the system's leading coefficients.
    """

    n: int
    alpha: np.ndarray
    beta: np.ndarray
    rows: list
    log_sigma_diag: np.ndarray
    log_sigma_pi: np.ndarray
    sys: PolynomialSystem

    @property
    def rows_computed(self) -> int:
        return len(self.rows)

    def mixed_moment(self, k: int, l: int) -> float:
        """``sigma_{k,l}`` (zero for ``l < k``)."""
        if l < k:
            return 0.0
        if k >= len(self.rows) or l - k >= self.rows[k].size:
            raise IndexOutOfRange(f"sigma_({k},{l}) not in the computed triangle")
        return float(self.rows[k][l - k] * math.exp(self.log_sigma_diag[k]))

    def log_norm_sq(self, k: int) -> float:
        """``ln ||phi_k||^2 = ln(c(k, k) sigma_{k,k})``."""
        if k >= len(self.rows):
            raise IndexOutOfRange(
                f"||phi_{k}|| needs moments up to degree {2 * k}; the chain has {len(self.rows)} rows"
            )
        return float(self.log_sigma_diag[k] - self.log_sigma_pi[k])

    def evaluate_monic(self, k: int, x) -> np.ndarray:
        """``phi_k(x)`` from the monic recurrence."""
        if k > self.n:
            raise IndexOutOfRange(f"phi_{k} needs depth {k}, chain has {self.n}")
        x = np.asarray(x, dtype=float)
        prev, cur = np.zeros_like(x), np.ones_like(x)
        for j in range(k):
            prev, cur = cur, (x - self.alpha[j]) * cur - self.beta[j] * prev
        return cur


def modified_chebyshev(
    d,
    sys: PolynomialSystem,
    n: int | None = None,
    counter: OpCounter | None = None,
    null_final: bool = False,
) -> MonicChain:
    """Monic recurrence of ``mu`` from the moments ``d(0) ..`` (at least ``2n`` of them).

    With ``2n + 1`` or more moments the squared norm of ``phi_n`` is also
    available.  Raises :class:`MeasureDegenerate` when the Gram matrix of
    ``mu`` becomes singular; the exception reports how many polynomials
    were completed.  With ``null_final`` a vanishing norm of ``phi_n``
    itself is accepted and recorded as ``log_sigma_diag[n] = -inf`` (the
    recurrence up to ``phi_n`` does not depend on it).
    """
    d = np.asarray(d, dtype=float)
    L = d.shape[0] - 1
    if n is None:
        n = (L + 1) // 2
    if n < 0:
        raise ValueError("depth must be non-negative")
    if L + 1 < 2 * n:
        raise IndexOutOfRange(f"depth {n} needs {2 * n} moments, got {L + 1}")
    if not d[0] > 0:
        raise MeasureDegenerate("d(0) must be positive", depth=0)
    A, B, C = sys.plain_coefficients(L + 1)
    log_pi = sys.leading_coefficient_logs(n + 1)

    alpha = np.zeros(n)
    beta = np.zeros(n)
    rows: list[np.ndarray] = [d / d[0]]
    log_diag = [math.log(d[0])]
    # number of rows to build: rows 0..n-1 always, row n when moments allow
    last_row = n if L >= 2 * n else n - 1
    if n >= 1:
        alpha[0] = B[0] + A[0] * rows[0][1]
        _count(counter, 2)
    cumulative = 0.0
    for k in range(1, last_row + 1):
        top = L - k  # row k covers l = k .. L - k
        prev = rows[k - 1]  # offset k - 1
        ls = np.arange(k, top + 1)
        raw = A[ls] * prev[ls + 1 - (k - 1)] + (B[ls] - alpha[k - 1]) * prev[ls - (k - 1)]
        raw += C[ls] * prev[ls - 1 - (k - 1)]
        _count(counter, 4 * ls.size)
        if k >= 2:
            raw -= A[k - 2] * rows[k - 2][ls - (k - 2)]
            _count(counter, ls.size)
        r = raw[0]
        step = r / C[k] if r > 0 else -math.inf
        if step > 0:
            cumulative += math.log(step)
        if not step > STEP_TOL or cumulative < CUMULATIVE_LOG_TOL:
            if null_final and k == n:
                rows.append(np.zeros_like(raw))
                log_diag.append(-math.inf)
                break
            raise MeasureDegenerate(
                f"Gram matrix singular at degree {k} (beta ratio {step:.3e})", depth=k
            )
        row = raw / r
        _count(counter, ls.size)
        rows.append(row)
        log_diag.append(log_diag[-1] + math.log(r))
        if k < n:
            beta[k] = A[k - 1] * r
            alpha[k] = B[k] + A[k] * row[1] - A[k - 1] * prev[1]
            _count(counter, 5)
    return MonicChain(n, alpha, beta, rows, np.array(log_diag), log_pi, sys)


@dataclass(frozen=True)
class ConnectionTriangle:
    """Lower-triangular ``c(k, l) = values[k, l] * exp(log_scale[k])``.

    ``values`` is row-normalized when the rows span many orders of
    magnitude; :meth:`dense` returns the actual coefficients.
    """

    values: np.ndarray
    log_scale: np.ndarray

    @property
    def n(self) -> int:
        return self.values.shape[0] - 1

    def dense(self) -> np.ndarray:
        return self.values * np.exp(self.log_scale)[:, None]

    def __getitem__(self, kl: tuple[int, int]) -> float:
        k, l = kl
        if l > k or l < 0:
            return 0.0
        return float(self.values[k, l] * math.exp(self.log_scale[k]))

    def row_sums(self) -> np.ndarray:
        return self.dense().sum(axis=1)


def connection_from_measure(
    chain: MonicChain, sys: PolynomialSystem | None = None, n: int | None = None, counter: OpCounter | None = None
) -> ConnectionTriangle:
    """``c_{phi P}(k, l)`` for ``0 <= l <= k <= n`` (default ``n = chain.n``).

    ``values`` holds ``c(k, l) / c(k, k)`` (unit diagonal) and
    ``log_scale[k] = ln c(k, k) = -ln sigma_k(pi)``.
    """
    sys = chain.sys if sys is None else sys
    n = chain.n if n is None else n
    if n > chain.n:
        raise IndexOutOfRange(f"connection depth {n} exceeds chain depth {chain.n}")
    A, B, C = sys.plain_coefficients(n + 2)
    U = np.zeros((n + 1, n + 1))
    U[0, 0] = 1.0
    for k in range(n):
        # row k+1 from rows k and k-1; entries l = 0..k+1
        cur = U[k, : k + 1]
        nxt = U[k + 1]
        nxt[1 : k + 2] += A[:k + 1] * cur
        nxt[: k + 1] += (B[: k + 1] - chain.alpha[k]) * cur
        nxt[:k] += C[1 : k + 1] * cur[1:]
        _count(counter, 3 * (k + 1))
        if k >= 1:
            r = chain.beta[k] / A[k - 1]
            nxt[:k] -= r * U[k - 1, :k]
            _count(counter, k + 1)
        nxt[: k + 2] /= A[k]
        _count(counter, k + 2)
    log_scale = -chain.log_sigma_pi[: n + 1]
    return ConnectionTriangle(U, np.asarray(log_scale, dtype=float))


def connect_systems(P: PolynomialSystem, Q: PolynomialSystem, n: int) -> ConnectionTriangle:
    """``c_{QP}(k, l)`` with ``Q_k = sum_l c_{QP}(k, l) P_l`` for ``k <= n``.

    Uses ``x P_l = A_l P_{l+1} + B_l P_l + C_l P_{l-1}`` for the target
    system together with ``Q``'s normalized recurrence.
    """
    A, B, C = P.plain_coefficients(n + 2)
    qa, qb, qc = Q.coefficients(max(n, 1))
    a0, b0 = qa[0], qb[0]
    c = np.zeros((n + 1, n + 1))
    c[0, 0] = 1.0
    for k in range(n):
        an, bn, cn = (1.0, 0.0, 0.0) if k == 0 else (qa[k], qb[k], qc[k])
        cur = c[k, : k + 1]
        nxt = c[k + 1]
        nxt[1 : k + 2] += A[: k + 1] * cur
        nxt[: k + 1] += (B[: k + 1] - b0 - a0 * bn) * cur
        nxt[:k] += C[1 : k + 1] * cur[1:]
        if k >= 1:
            nxt[:k] -= a0 * cn * c[k - 1, :k]
        nxt /= a0 * an
    return ConnectionTriangle(c, np.zeros(n + 1))


def orthonormal_leading_log(chain: MonicChain, k: int) -> float:
    """``ln rho_k(mu) = -1/2 ln ||phi_k||^2``."""
    return -0.5 * chain.log_norm_sq(k)


def connection_to_orthonormal(chain: MonicChain, top: int, k_max: int | None = None) -> np.ndarray:
    """``c_{Pq}(top, k) = sigma_{k,top} / ||phi_k||`` for ``k <= min(top, k_max)``.

    These expand ``P_top`` in the orthonormal polynomials ``q_k`` of ``mu``.
    """
    k_max = top if k_max is None else k_max
    out = np.zeros(k_max + 1)
    for k in range(k_max + 1):
        row = chain.rows[k] if k < len(chain.rows) else None
        if row is None or top - k >= row.size:
            raise IndexOutOfRange(f"sigma_({k},{top}) needs moments up to degree {top + k}")
        # sigma_{k,top} / ||phi_k|| = rows[k][top-k] * exp(L_k / 2 + ln sigma_k(pi) / 2)
        out[k] = row[top - k] * math.exp(0.5 * (chain.log_sigma_diag[k] + chain.log_sigma_pi[k]))
    return out
