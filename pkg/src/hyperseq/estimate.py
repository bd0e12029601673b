"""Spectral estimation: periodograms, the kernel ``t_n`` and density estimates.

The two-dimensional periodogram

    I_N(x, y) = (sum_{k<=N} h(k))^{-2} sum_{k,l<=N} X_k conj(X_l) P_k(x) P_l(y) h(k) h(l)

factorizes as ``u(x) conj(u(y))`` with ``u(x) = sum_k X_k P_k(x) h(k) / sum h``,
so a grid costs ``O(N (n_x + n_y))`` rather than ``O(N^2 n_x n_y)``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import IO, Sequence

import numpy as np

from .errors import IndexOutOfRange, ParameterOutOfRange
from .hyperconv import haar_weights
from .measures import BiMeasure, bimoment_matrix
from .polysys import PolynomialSystem
from .sequences import Path, PathBatch
from .tables import write_csv


@dataclass(frozen=True)
class Grid2:
    """Values ``I(x_i, y_j)`` on a tensor grid; ``values[i, j]`` belongs to ``(x[i], y[j])``."""

    x: np.ndarray
    y: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.x.size < 2 or self.y.size < 2:
            raise ValueError("a grid needs at least two nodes per axis")
        if self.values.shape != (self.x.size, self.y.size):
            raise ValueError("values must have shape (len(x), len(y))")

    def nearest_index(self, x0: float, y0: float) -> tuple[int, int]:
        return int(np.argmin(np.abs(self.x - x0))), int(np.argmin(np.abs(self.y - y0)))

    def at(self, x0: float, y0: float) -> complex:
        i, j = self.nearest_index(x0, y0)
        return complex(self.values[i, j])

    def to_csv(self, target: str | os.PathLike | IO[str]) -> None:
        """Rows ``x,y,re,im`` with ``y`` varying fastest."""
        V = self.values.astype(complex)
        rows = (
            (self.x[i], self.y[j], V[i, j].real, V[i, j].imag) for i in range(self.x.size) for j in range(self.y.size)
        )
        write_csv(target, ("x", "y", "re", "im"), rows)


def grid_nodes(sys: PolynomialSystem, n: int) -> np.ndarray:
    """``n`` equispaced nodes spanning the dual space ``D_s``."""
    lo, hi = sys.support
    return np.linspace(lo, hi, n)


def _axes(sys: PolynomialSystem, grid) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(grid, (int, np.integer)):
        g = grid_nodes(sys, int(grid))
        return g, g
    if isinstance(grid, tuple) and len(grid) == 2:
        xs, ys = np.asarray(grid[0], dtype=float), np.asarray(grid[1], dtype=float)
    else:
        xs = ys = np.asarray(grid, dtype=float)
    lo, hi = sys.support
    slack = 1e-12 * max(1.0, abs(lo), abs(hi))
    for g in (xs, ys):
        if g.ndim != 1 or np.any(g < lo - slack) or np.any(g > hi + slack):
            raise ParameterOutOfRange(f"grid nodes must lie in [{lo}, {hi}]")
    return xs, ys


def _weighted_basis(sys: PolynomialSystem, N: int, nodes: np.ndarray) -> np.ndarray:
    """``B[k, i] = P_k(x_i) h(k) / sum_{l<=N} h(l)``."""
    h = haar_weights(sys, N)
    return sys.evaluate_all(N, nodes) * (h / h.sum())[:, None]


def periodogram(path: Path | PathBatch | np.ndarray, sys: PolynomialSystem, N: int, grid) -> Grid2:
    """``I_N`` of one path, or the mean of ``I_N`` over a batch of paths."""
    V = path.values if isinstance(path, (Path, PathBatch)) else np.asarray(path)
    V = np.atleast_2d(V)
    if V.shape[1] < N + 1:
        raise IndexOutOfRange(f"periodogram of order {N} needs {N + 1} values, path has {V.shape[1]}")
    xs, ys = _axes(sys, grid)
    Bx = _weighted_basis(sys, N, xs)
    By = Bx if ys is xs else _weighted_basis(sys, N, ys)
    U = V[:, : N + 1] @ Bx
    W = U if ys is xs else V[:, : N + 1] @ By
    values = U.T @ W.conj() / V.shape[0]
    if not np.iscomplexobj(V):
        values = values.real
    return Grid2(xs, ys, values)


def mean_abs_periodogram(batch: PathBatch | np.ndarray, sys: PolynomialSystem, N: int, grid) -> Grid2:
    """Mean of ``|I_N|`` over a batch.

    Unlike the mean of ``I_N``, this keeps the peaks at off-diagonal atom
    pairs ``(x_i, x_j)`` when the amplitudes are uncorrelated, where
    ``E I_N`` itself is close to zero.
    """
    V = np.atleast_2d(batch.values if isinstance(batch, PathBatch) else np.asarray(batch))
    if V.shape[1] < N + 1:
        raise IndexOutOfRange(f"periodogram of order {N} needs {N + 1} values, path has {V.shape[1]}")
    xs, ys = _axes(sys, grid)
    U = np.abs(V[:, : N + 1] @ _weighted_basis(sys, N, xs))
    W = U if ys is xs else np.abs(V[:, : N + 1] @ _weighted_basis(sys, N, ys))
    return Grid2(xs, ys, U.T @ W / V.shape[0])


def expected_periodogram_from_kernel(K: np.ndarray, sys: PolynomialSystem, grid) -> Grid2:
    """``E I_N`` for a covariance matrix ``K[k, l] = E X_k conj(X_l)``, ``k, l <= N``."""
    K = np.asarray(K)
    N = K.shape[0] - 1
    xs, ys = _axes(sys, grid)
    Bx = _weighted_basis(sys, N, xs)
    By = Bx if ys is xs else _weighted_basis(sys, N, ys)
    values = Bx.T @ K @ By
    return Grid2(xs, ys, values)


def expected_periodogram(mu2: BiMeasure, sys: PolynomialSystem, N: int, grid) -> Grid2:
    """``E I_N`` of the harmonizable sequence with bimeasure ``mu2``."""
    return expected_periodogram_from_kernel(bimoment_matrix(mu2, sys, N), sys, grid)


def t_statistic(sys: PolynomialSystem, n: int, x, y, method: str = "sum") -> np.ndarray:
    """``t_n(x, y) = (sum_{k<=n} h(k))^{-1} sum_{k<=n} P_k(x) P_k(y) h(k)``.

    ``method="cd"`` uses the Christoffel-Darboux form

        sum_k P_k(x) P_k(y) h(k) = A_n h(n) (P_{n+1}(x) P_n(y) - P_n(x) P_{n+1}(y)) / (x - y)

    with ``x P_n = A_n P_{n+1} + B_n P_n + C_n P_{n-1}``; where ``|x - y|``
    is below ``1e-7`` it falls back to the direct sum.
    """
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    h = haar_weights(sys, n)
    H = h.sum()
    if method == "sum":
        Px = sys.evaluate_all(n, x)
        Py = sys.evaluate_all(n, y)
        return np.tensordot(h, Px * Py, axes=1) / H
    if method != "cd":
        raise ValueError("method must be 'sum' or 'cd'")
    A, _, _ = sys.plain_coefficients(n + 1)
    Px = sys.evaluate_all(n + 1, x)
    Py = sys.evaluate_all(n + 1, y)
    diff = x - y
    close = np.abs(diff) < 1e-7
    safe = np.where(close, 1.0, diff)
    cd = A[n] * h[n] * (Px[n + 1] * Py[n] - Px[n] * Py[n + 1]) / safe / H
    if np.any(close):
        direct = np.tensordot(h, Px[: n + 1] * Py[: n + 1], axes=1) / H
        cd = np.where(close, direct, cd)
    return cd


def density_weights(N: int, kind: str = "fejer") -> np.ndarray:
    """``a_{N,s}``: Fejer ``1 - s / (N + 1)`` or partial sums ``1``."""
    s = np.arange(N + 1)
    if kind == "fejer":
        return 1.0 - s / (N + 1.0)
    if kind == "partial":
        return np.ones(N + 1)
    raise ValueError("weights must be 'fejer' or 'partial'")


def density_estimate(d_hat, sys: PolynomialSystem, N: int, nodes, weights: str = "fejer") -> np.ndarray:
    """``f_N(x) = sum_{s<=N} a_{N,s} d(s) P_s(x) h(s)`` at the given nodes.

    Negative excursions are returned as computed.
    """
    d_hat = np.asarray(d_hat)
    if d_hat.shape[0] < N + 1:
        raise IndexOutOfRange(f"density estimate of order {N} needs {N + 1} moments")
    coef = density_weights(N, weights) * d_hat[: N + 1] * haar_weights(sys, N)
    return np.tensordot(coef, sys.evaluate_all(N, np.asarray(nodes, dtype=float)), axes=1)


def ensemble_covariance(paths: PathBatch | Sequence[Path] | np.ndarray, n_max: int) -> np.ndarray:
    """``d(k) ~ mean over paths of X_k conj(X_0)`` for ``k <= n_max``."""
    if isinstance(paths, PathBatch):
        V = paths.values
    elif isinstance(paths, np.ndarray):
        V = np.atleast_2d(paths)
    else:
        V = np.stack([p.values for p in paths])
    if V.shape[1] < n_max + 1:
        raise IndexOutOfRange(f"paths have {V.shape[1]} values, need {n_max + 1}")
    d = (V[:, : n_max + 1] * V[:, :1].conj()).mean(axis=0)
    return d if np.iscomplexobj(d) and np.any(d.imag != 0) else d.real


def atom_neighbourhood_mask(grid: Grid2, atoms: Sequence[float], radius: float) -> np.ndarray:
    """Nodes within ``radius`` (max-norm) of some atom pair ``(x_i, x_j)``."""
    mask = np.zeros(grid.values.shape, dtype=bool)
    for a in atoms:
        for b in atoms:
            mask |= (np.abs(grid.x - a)[:, None] <= radius) & (np.abs(grid.y - b)[None, :] <= radius)
    return mask
