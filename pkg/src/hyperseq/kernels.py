"""Covariance kernels on a polynomial hypergroup and their classification.

A :class:`Kernel` is backed by a moment sequence (stationary case,
``K(n, m) = sum_k g(n, m, k) d(k)``), by a bimeasure (harmonizable case,
``K(n, m) = int P_n(x) P_m(y) dmu(x, y)``), or by an explicit table.  The
checks return ``(passed, worst_residual, witness)`` so that margins can be
inspected, not only the verdict.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import IO

import numpy as np

from .errors import IndexOutOfRange, NonHermitian
from .hyperconv import haar_weights, linearize
from .measures import BiMeasure, bimoment_matrix, require_atomic
from .polysys import PolynomialSystem
from .structmat import build_matrix
from .tables import read_csv, write_csv


@dataclass(frozen=True)
class CheckResult:
    """Outcome of a kernel identity check.

    ``witness`` is the first index pair (or atom) attaining the worst
    residual, or ``None`` when nothing was checked.
    """

    passed: bool
    residual: float
    witness: tuple | None

    def __iter__(self):
        return iter((self.passed, self.residual, self.witness))

    def __bool__(self) -> bool:
        return self.passed


def _stationary_matrix(sys: PolynomialSystem, d: np.ndarray, N: int) -> np.ndarray:
    if np.iscomplexobj(d):
        re = build_matrix(d.real, sys, N).entries
        im = build_matrix(d.imag, sys, N).entries
        return re + 1j * im
    return build_matrix(d, sys, N).entries


class Kernel:
    """Covariance kernel ``K(n, m) = E X_n conj(X_m)``.

    Use :meth:`stationary`, :meth:`harmonizable` or :meth:`from_table`.
    """

    def __init__(self, sys: PolynomialSystem, backend: str, data):
        self.sys = sys
        self.backend = backend
        self._data = data
        self._cache: np.ndarray | None = None

    @classmethod
    def stationary(cls, sys: PolynomialSystem, d) -> Kernel:
        d = np.asarray(d)
        if d.ndim != 1 or d.size == 0:
            raise ValueError("moment sequence must be a non-empty vector")
        return cls(sys, "stationary", d)

    @classmethod
    def harmonizable(cls, sys: PolynomialSystem, mu2: BiMeasure) -> Kernel:
        return cls(sys, "harmonizable", mu2)

    @classmethod
    def from_table(cls, sys: PolynomialSystem, table, tol: float = 1e-12) -> Kernel:
        T = np.asarray(table)
        if T.ndim != 2 or T.shape[0] != T.shape[1]:
            raise ValueError("kernel table must be square")
        scale = max(1.0, float(np.abs(T).max()))
        if np.abs(T - T.conj().T).max() > tol * scale:
            raise NonHermitian("kernel table is not hermitian")
        return cls(sys, "table", T)

    @property
    def moments(self) -> np.ndarray:
        if self.backend != "stationary":
            raise AttributeError("only stationary kernels carry a moment sequence")
        return self._data

    @property
    def size_limit(self) -> int | None:
        """Largest usable index (``None`` when unbounded)."""
        if self.backend == "table":
            return self._data.shape[0] - 1
        return None

    def matrix(self, N: int) -> np.ndarray:
        """``[K(n, m)]_{n, m <= N}`` (complex)."""
        if self._cache is not None and self._cache.shape[0] > N:
            return self._cache[: N + 1, : N + 1]
        if self.backend == "stationary":
            d = self._data
            if d.shape[0] < 2 * N + 1:
                raise IndexOutOfRange(f"moments 0..{2 * N} needed, have {d.shape[0]}")
            M = _stationary_matrix(self.sys, d, N).astype(complex)
        elif self.backend == "harmonizable":
            M = bimoment_matrix(self._data, self.sys, N)
        else:
            T = self._data
            if T.shape[0] <= N:
                raise IndexOutOfRange(f"table has {T.shape[0]} rows, index {N} requested")
            M = T[: N + 1, : N + 1].astype(complex)
        self._cache = M
        return M

    def column0(self, N: int) -> np.ndarray:
        """``K(k, 0)`` for ``k <= N``."""
        if self.backend == "stationary":
            d = self._data
            if d.shape[0] <= N:
                raise IndexOutOfRange(f"moment {N} requested, have {d.shape[0]}")
            return d[: N + 1].astype(complex)
        if self.backend == "harmonizable":
            return bimoment_matrix(self._data, self.sys, N, 0)[:, 0]
        return self.matrix(N)[:, 0]

    def value(self, n: int, m: int) -> complex:
        if n < 0 or m < 0:
            raise IndexOutOfRange("kernel indices must be non-negative")
        if self.backend == "stationary":
            d = self._data
            if d.shape[0] <= n + m:
                raise IndexOutOfRange(f"K({n},{m}) needs moments up to {n + m}")
            return complex(linearize(self.sys, n, m) @ d[abs(n - m) : n + m + 1])
        if self.backend == "harmonizable":
            return complex(bimoment_matrix(self._data, self.sys, n, m)[n, m])
        T = self._data
        if max(n, m) >= T.shape[0]:
            raise IndexOutOfRange(f"K({n},{m}) outside the {T.shape[0]}x{T.shape[0]} table")
        return complex(T[n, m])

    def __repr__(self) -> str:
        return f"Kernel({self.sys.family}, {self.backend})"


def kernel_value(K: Kernel, n: int, m: int) -> complex:
    return K.value(n, m)


def kernel_min_eigenvalue(K: Kernel, N: int) -> float:
    """Smallest eigenvalue of ``[K(n, m)]_{n, m <= N}``."""
    return float(np.linalg.eigvalsh(K.matrix(N))[0])


def is_positive_definite_kernel(K: Kernel, N: int, tol: float = 1e-10) -> bool:
    """True iff the ``(N+1) x (N+1)`` kernel matrix has smallest eigenvalue ``>= -tol``."""
    return kernel_min_eigenvalue(K, N) >= -tol


def _convolved_rows(sys: PolynomialSystem, n_max: int, s: int) -> list[tuple[int, np.ndarray]]:
    """``(start, g(n, s, .))`` for ``n <= n_max``."""
    return [(abs(n - s), linearize(sys, n, s)) for n in range(n_max + 1)]


def _worst(R: np.ndarray, scale: float, tol: float) -> CheckResult:
    if R.size == 0:
        return CheckResult(True, 0.0, None)
    idx = np.unravel_index(int(np.argmax(R)), R.shape)
    worst = float(R[idx])
    return CheckResult(bool(worst <= tol * scale), worst, tuple(int(i) for i in idx))


def check_stationary(K: Kernel, N: int, tol: float = 1e-10) -> CheckResult:
    """Test ``K(n, m) = sum_k g(n, m, k) K(k, 0)`` for ``n, m <= N``.

    ``tol`` is relative to ``max(1, |K(0, 0)|)``.  For table kernels only
    pairs with ``n + m`` inside the table are tested.
    """
    limit = K.size_limit
    N_eff = N if limit is None else min(N, limit)
    col_max = 2 * N if limit is None else min(2 * N, limit)
    col = K.column0(col_max)
    M = K.matrix(N_eff)
    R = np.full((N_eff + 1, N_eff + 1), 0.0)
    for n in range(N_eff + 1):
        for m in range(N_eff + 1):
            if n + m > col_max:
                continue
            g = linearize(K.sys, n, m)
            R[n, m] = abs(M[n, m] - g @ col[abs(n - m) : n + m + 1])
    return _worst(R, max(1.0, abs(col[0])), tol)


def check_cyclostationary(K: Kernel, T: int, N: int, tol: float = 1e-10) -> CheckResult:
    """Test ``K(n * T, m) = K(n, m * T)`` for ``n, m <= N``.

    ``K(n * T, m) = sum_k g(n, T, k) K(k, m)``.  With ``T = 1`` this is
    equivalent to stationarity.
    """
    if T < 1:
        raise ValueError("period must be at least 1")
    limit = K.size_limit
    if limit is not None and limit < N + T:
        raise IndexOutOfRange(f"table too small for N={N}, T={T}")
    M = K.matrix(N + T)
    rows = _convolved_rows(K.sys, N, T)
    R = np.zeros((N + 1, N + 1))
    for n in range(N + 1):
        sn, gn = rows[n]
        left = gn @ M[sn : sn + gn.size, : N + 1]  # K(n*T, m) for all m
        for m in range(N + 1):
            sm, gm = rows[m]
            right = M[n, sm : sm + gm.size] @ gm
            R[n, m] = abs(left[m] - right)
    return _worst(R, max(1.0, abs(M[0, 0])), tol)


def cyclo_support_test(mu2: BiMeasure, sys: PolynomialSystem, T: int, tol: float = 1e-9) -> CheckResult:
    """True iff every atom ``(x, y)`` of ``mu2`` satisfies ``|P_T(x) - P_T(y)| <= tol``.

    Raises :class:`~hyperseq.errors.NonAtomicUnsupported` for bimeasures
    with continuous parts.
    """
    require_atomic(mu2)
    worst, witness = 0.0, None
    for x, y, w in mu2.atoms:
        if w == 0:
            continue
        r = abs(float(sys.evaluate(T, x)) - float(sys.evaluate(T, y)))
        if witness is None or r > worst:
            worst, witness = r, (x, y)
    return CheckResult(bool(worst <= tol), worst, witness)


def asymptotic_M(K: Kernel, s: int, n: int) -> complex:
    """``(sum_{k<=n} h(k))^{-1} sum_{k<=n} K(k * s, k) h(k)``."""
    M = K.matrix(n + s)
    h = haar_weights(K.sys, n)
    terms = np.empty(n + 1, dtype=complex)
    for k in range(n + 1):
        g = linearize(K.sys, k, s)
        lo = abs(k - s)
        terms[k] = g @ M[lo : lo + g.size, k]
    return complex(np.sum(terms * h) / h.sum())


def asymptotic_H(K: Kernel, s: int, n: int) -> complex:
    """``(sum_{k<=n} h(k))^{-1} sum_{k<=n} (K(k * s, 0) - K(k, s)) h(k)``."""
    M = K.matrix(n + s)
    h = haar_weights(K.sys, n)
    terms = np.empty(n + 1, dtype=complex)
    for k in range(n + 1):
        g = linearize(K.sys, k, s)
        lo = abs(k - s)
        terms[k] = g @ M[lo : lo + g.size, 0] - M[k, s]
    return complex(np.sum(terms * h) / h.sum())


def wiener_statistic(K: Kernel, n: int, variant: str = "c") -> float:
    """Haar-weighted averages of a stationary kernel.

    ``b``: ``(sum h)^{-1} sum_k |K(k, 0)| h(k)``;
    ``c``: the same with ``|K(k, 0)|^2``;
    ``d``: ``(sum h)^{-2} sum_{k,l} |K(k, l)|^2 h(k) h(l)``.
    Sums are pairwise (``numpy.sum``), so the value does not depend on
    evaluation order beyond rounding.
    """
    if K.backend != "stationary":
        raise ValueError("Wiener statistics are defined for stationary kernels")
    h = haar_weights(K.sys, n)
    H = h.sum()
    if variant in ("b", "c"):
        v = np.abs(K.column0(n))
        if variant == "c":
            v = v * v
        return float(np.sum(v * h) / H)
    if variant == "d":
        A = np.abs(K.matrix(n)) ** 2
        return float(np.sum(A * np.outer(h, h)) / (H * H))
    raise ValueError(f"unknown variant {variant!r}; use b, c or d")


# ----------------------------------------------------------------------
# CSV
# ----------------------------------------------------------------------
def write_kernel_csv(target: str | os.PathLike | IO[str], K: Kernel | np.ndarray, N: int | None = None) -> None:
    """Rows ``n,m,re,im``."""
    M = K.matrix(N) if isinstance(K, Kernel) else np.asarray(K, dtype=complex)
    rows = ((n, m, M[n, m].real, M[n, m].imag) for n in range(M.shape[0]) for m in range(M.shape[1]))
    write_csv(target, ("n", "m", "re", "im"), rows)


def read_kernel_table(source: str | os.PathLike | IO[str]) -> np.ndarray:
    header, rows = read_csv(source)
    if [h.strip() for h in header] != ["n", "m", "re", "im"]:
        raise ValueError("kernel CSV needs the header n,m,re,im")
    idx = [(int(r[0]), int(r[1])) for r in rows]
    size = 1 + max(max(i, j) for i, j in idx)
    T = np.zeros((size, size), dtype=complex)
    for (i, j), r in zip(idx, rows):
        T[i, j] = float(r[2]) + 1j * float(r[3])
    return T


def cyclo_example(C: float = 2.0, sys: PolynomialSystem | None = None) -> Kernel:
    """Harmonizable kernel of ``(C delta_1 + delta_{-1}) x (C delta_1 + delta_{-1})``.

    For Chebyshev polynomials of the first kind ``K(n, m) = (C + (-1)^n)(C + (-1)^m)``.
    """
    from .polysys import chebyshev_first

    sys = chebyshev_first() if sys is None else sys
    return Kernel.harmonizable(sys, BiMeasure.product([(1.0, C), (-1.0, 1.0)]))
