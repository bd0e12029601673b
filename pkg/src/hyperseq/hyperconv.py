"""Convolution structure of a polynomial hypergroup.

The product of two polynomials expands as

    P_m P_n = sum_{k=|m-n|}^{m+n} g(m, n, k) P_k,

and the weights ``g(m, n, .)`` define the convolution of point measures on
the non-negative integers.  This module computes them, the Haar weights
``h(n) = 1 / g(n, n, 0)``, translates of sequences and two tests built on
them (positive definiteness and the growth condition on ``h``).
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .errors import HypergroupViolation, IndexOutOfRange
from .polysys import PolynomialSystem

NEG_TOL = 1e-12

_ROWS_KEY = "linearization_rows"


class LinearizationRows:
    """Expansions of ``P_m P_l`` for a fixed ``m`` and ``l = 0, 1, 2, ...``.

    Row ``l`` is stored densely on the index range ``0 .. m + l`` (raw
    values, before clamping).  Rows are produced by

        P_m P_{l+1} = (P_1 (P_m P_l) - b_l P_m P_l - c_l P_m P_{l-1}) / a_l,

    where multiplication by ``P_1`` acts on the basis through the
    recurrence itself.  Each step costs ``O(m + l)``.
    """

    def __init__(self, sys: PolynomialSystem, m: int):
        self.sys = sys
        self.m = m
        first = np.zeros(m + 1)
        first[m] = 1.0
        self.rows: list[np.ndarray] = [first]

    def extend(self, l_max: int) -> None:
        rows = self.rows
        if len(rows) > l_max:
            return
        a, b, c = self.sys.coefficients(self.m + l_max + 1)
        # Coefficients of P_1 P_s in the basis; P_1 P_0 = P_1.
        pa, pb, pc = a.copy(), b.copy(), c.copy()
        pa[0], pb[0], pc[0] = 1.0, 0.0, 0.0
        while len(rows) <= l_max:
            l = len(rows) - 1
            cur = rows[l]
            size = cur.size
            nxt = np.zeros(size + 1)
            nxt[1:] += pa[:size] * cur
            nxt[:size] += pb[:size] * cur
            nxt[: size - 1] += pc[1:size] * cur[1:]
            # For l = 0 the product P_m P_1 is just P_1 applied to P_m.
            if l > 0:
                nxt[:size] -= b[l] * cur
                prev = rows[l - 1]
                nxt[: prev.size] -= c[l] * prev
                nxt /= a[l]
            rows.append(nxt)

    def row(self, l: int) -> np.ndarray:
        self.extend(l)
        return self.rows[l]


def _rows_for(sys: PolynomialSystem, m: int) -> LinearizationRows:
    with sys.memo_lock:
        table = sys.memo.setdefault(_ROWS_KEY, {})
        rows = table.get(m)
        if rows is None:
            rows = table[m] = LinearizationRows(sys, m)
    return rows


def _finish(raw: np.ndarray, lo: int, sys: PolynomialSystem, m: int, n: int) -> np.ndarray:
    vec = raw[lo:].copy()
    worst = float(vec.min())
    if worst < -NEG_TOL and sys.family == "Custom":
        raise HypergroupViolation(f"g({m},{n},.) has a negative entry {worst:.3e}")
    vec[vec < 0.0] = 0.0
    total = vec.sum()
    if total > 0:
        vec /= total
    return vec


def linearize(sys: PolynomialSystem, m: int, n: int) -> np.ndarray:
    """Linearization weights ``g(m, n, k)`` for ``k = |m-n| .. m+n``.

    Negative rounding dust (above ``-1e-12``) is clamped to zero and the
    vector renormalized to sum one.  Custom systems whose coefficients go
    genuinely negative raise :class:`HypergroupViolation`.
    """
    if m < 0 or n < 0:
        raise ValueError("indices must be non-negative")
    big, small = max(m, n), min(m, n)
    with sys.memo_lock:
        rows = _rows_for(sys, big)
        raw = rows.row(small)
    return _finish(raw, big - small, sys, m, n)


def linearization_coefficient(sys: PolynomialSystem, m: int, n: int, k: int) -> float:
    lo = abs(m - n)
    if k < lo or k > m + n:
        return 0.0
    return float(linearize(sys, m, n)[k - lo])


def iter_linearization_rows(sys: PolynomialSystem, m: int, l_max: int):
    """Yield ``(l, g(m, l, .))`` for ``l = 0 .. l_max`` without caching.

    Each yielded vector is dense on ``0 .. m + l`` (entries below ``|m-l|``
    are zero up to rounding).  Used by bulk constructions that would
    otherwise flood the memo table.
    """
    rows = LinearizationRows(sys, m)
    for l in range(l_max + 1):
        rows.extend(l)
        yield l, rows.rows[l]
        if l >= 2:
            # Only the last two rows feed the recurrence.
            rows.rows[l - 2] = None  # type: ignore[call-overload]


def clear_cache(sys: PolynomialSystem) -> None:
    with sys.memo_lock:
        sys.memo.pop(_ROWS_KEY, None)


# ----------------------------------------------------------------------
# Haar weights
# ----------------------------------------------------------------------
def log_haar_weights(sys: PolynomialSystem, n_max: int) -> np.ndarray:
    """``ln h(n)`` for ``n <= n_max`` via the product formula."""
    a, _, c = sys.coefficients(max(n_max, 1))
    out = np.zeros(n_max + 1)
    if n_max >= 1:
        la = np.log(a[1:n_max])  # a_1 .. a_{n_max-1}
        lc = np.log(c[1 : n_max + 1])  # c_1 .. c_{n_max}
        out[1] = -lc[0]
        out[2:] = np.cumsum(la)[: n_max - 1] - np.cumsum(lc)[1:]
    return out


def haar_weights(sys: PolynomialSystem, n_max: int) -> np.ndarray:
    return np.exp(log_haar_weights(sys, n_max))


def haar_weight(sys: PolynomialSystem, n: int) -> float:
    """``h(n) = prod_{k<n} a_k / prod_{k<=n} c_k`` (products start at ``k = 1``)."""
    return float(math.exp(log_haar_weights(sys, n)[n]))


def condition_H_ratios(sys: PolynomialSystem, N: int) -> np.ndarray:
    """``r_n = h(n) / sum_{k<=n} h(k)`` for ``n <= N``, computed in log space."""
    lh = log_haar_weights(sys, N)
    running = np.logaddexp.accumulate(lh)
    return np.exp(lh - running)


# ----------------------------------------------------------------------
# translation and positive definiteness
# ----------------------------------------------------------------------
def translate(sys: PolynomialSystem, d: Sequence[complex] | np.ndarray, n: int, m: int) -> complex:
    """``(eps_n * eps_m)(d) = sum_k g(n, m, k) d(k)``."""
    d = np.asarray(d)
    if d.shape[0] <= n + m:
        raise IndexOutOfRange(f"sequence has {d.shape[0]} terms, translate({n},{m}) needs {n + m + 1}")
    g = linearize(sys, n, m)
    val = g @ d[abs(n - m) : n + m + 1]
    return complex(val) if np.iscomplexobj(val) else float(val)


def translation_matrix(sys: PolynomialSystem, d, N: int) -> np.ndarray:
    """The ``(N+1) x (N+1)`` matrix ``[(eps_i * eps_j)(d)]``."""
    d = np.asarray(d)
    if d.shape[0] <= 2 * N:
        raise IndexOutOfRange(f"sequence has {d.shape[0]} terms, need {2 * N + 1}")
    out = np.empty((N + 1, N + 1), dtype=np.result_type(d.dtype, float))
    for i in range(N + 1):
        for j in range(i + 1):
            v = linearize(sys, i, j) @ d[i - j : i + j + 1]
            out[i, j] = v
            out[j, i] = v
    return out


def positive_definite_margin(sys: PolynomialSystem, d, N: int) -> float:
    """Smallest eigenvalue of the translation matrix (a signed margin)."""
    M = translation_matrix(sys, d, N)
    return float(np.linalg.eigvalsh(M)[0])


def is_positive_definite(sys: PolynomialSystem, d, N: int, tol: float = 1e-10) -> bool:
    """True iff the translation matrix has smallest eigenvalue ``>= -tol``."""
    return positive_definite_margin(sys, d, N) >= -tol
