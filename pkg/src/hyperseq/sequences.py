"""Simulation of random sequences with prescribed hypergroup covariance.

Every generator is a deterministic function of its parameters and seed
(``numpy.random.default_rng``).  With ``n_paths=None`` a single
:class:`Path` is returned; otherwise a :class:`PathBatch` whose first row
equals the single path for the same seed.  All randomness is Gaussian.

Each generator has a companion ``*_kernel`` function giving the exact
covariance ``E X_n conj(X_m)`` of what it simulates, which is what the
Monte-Carlo tests compare against.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import IO, Any, Callable, Sequence

import numpy as np

from .errors import IndexOutOfRange, NoDensity
from .hyperconv import linearize, log_haar_weights
from .measures import SpectralMeasure, atomize, gram_from_measure, moments
from .polysys import PolynomialSystem, cartier_dunau
from .tables import read_csv, write_csv


@dataclass(frozen=True)
class Path:
    """Realization ``X_0 .. X_N`` with the metadata that produced it."""

    values: np.ndarray
    seed: int | None = None
    tag: str = ""
    meta: dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim != 1 or v.size == 0:
            raise ValueError("a path is a non-empty vector")
        if not np.all(np.isfinite(v)):
            raise ValueError("path values must be finite")
        object.__setattr__(self, "values", v)

    @property
    def N(self) -> int:
        return self.values.size - 1

    def __len__(self) -> int:
        return self.values.size

    def to_csv(self, target: str | os.PathLike | IO[str]) -> None:
        """Rows ``n,re,im``."""
        v = self.values.astype(complex)
        write_csv(target, ("n", "re", "im"), ((n, z.real, z.imag) for n, z in enumerate(v)))

    @staticmethod
    def from_csv(source: str | os.PathLike | IO[str]) -> Path:
        header, rows = read_csv(source)
        if [h.strip() for h in header] != ["n", "re", "im"]:
            raise ValueError("path CSV needs the header n,re,im")
        vals = np.array([float(r[1]) + 1j * float(r[2]) for r in rows])
        if np.all(vals.imag == 0):
            vals = vals.real
        return Path(vals, tag="csv")


@dataclass(frozen=True)
class PathBatch:
    """Independent realizations stacked row-wise, shape ``(n_paths, N + 1)``."""

    values: np.ndarray
    seed: int | None = None
    tag: str = ""
    meta: dict[str, Any] = field(default_factory=dict, compare=False)

    @property
    def n_paths(self) -> int:
        return self.values.shape[0]

    @property
    def N(self) -> int:
        return self.values.shape[1] - 1

    def path(self, i: int) -> Path:
        return Path(self.values[i], self.seed, self.tag, dict(self.meta))

    def __iter__(self):
        return (self.path(i) for i in range(self.n_paths))

    def covariance(self, n_max: int | None = None) -> np.ndarray:
        """Sample ``E X_n conj(X_m)`` (no centering; the sequences have mean zero)."""
        V = self.values if n_max is None else self.values[:, : n_max + 1]
        return V.T @ V.conj() / V.shape[0]

    def covariance_stderr(self, n_max: int | None = None) -> np.ndarray:
        """Standard errors of the entries of :meth:`covariance`."""
        V = self.values if n_max is None else self.values[:, : n_max + 1]
        prod = V[:, :, None] * V.conj()[:, None, :]
        return prod.std(axis=0, ddof=1) / np.sqrt(V.shape[0])


def _wrap(values: np.ndarray, n_paths: int | None, seed, tag: str, meta: dict) -> Path | PathBatch:
    if n_paths is None:
        return Path(values[0], seed, tag, meta)
    return PathBatch(values, seed, tag, meta)


def _count(n_paths: int | None) -> int:
    if n_paths is None:
        return 1
    if n_paths < 1:
        raise ValueError("n_paths must be positive")
    return int(n_paths)


# ----------------------------------------------------------------------
# white noise and moving averages
# ----------------------------------------------------------------------
def white_noise(sys: PolynomialSystem, N: int, seed: int | None = None, n_paths: int | None = None):
    """Independent centered Gaussians with ``Var Z_n = g(n, n, 0) = 1 / h(n)``."""
    rng = np.random.default_rng(seed)
    std = np.exp(-0.5 * log_haar_weights(sys, N))
    values = rng.standard_normal((_count(n_paths), N + 1)) * std
    return _wrap(values, n_paths, seed, "white_noise", {"family": sys.family})


def white_noise_kernel(sys: PolynomialSystem, N: int) -> np.ndarray:
    return np.diag(np.exp(-log_haar_weights(sys, N)))


def ma_weights(sys: PolynomialSystem, coefficients, N: int, haar_weighted: bool = True) -> np.ndarray:
    """``W[n, s]`` with ``X_n = sum_s W[n, s] Z_s`` for ``n <= N``, ``s <= N + q``.

    ``X_n = sum_k a_k h(k) T_n Z_k`` with ``T_n Z_k = sum_s g(n, k, s) Z_s``.
    With ``haar_weighted=False`` the factor ``h(k)`` is taken to be
    absorbed into ``a_k``.
    """
    a = np.asarray(coefficients, dtype=float)
    q = a.size - 1
    eff = a * np.exp(log_haar_weights(sys, q)) if haar_weighted else a
    W = np.zeros((N + 1, N + q + 1))
    for n in range(N + 1):
        for k in range(q + 1):
            if eff[k] != 0.0:
                W[n, abs(n - k) : n + k + 1] += eff[k] * linearize(sys, n, k)
    return W


def ma_sequence(
    sys: PolynomialSystem,
    coefficients,
    N: int,
    seed: int | None = None,
    n_paths: int | None = None,
    haar_weighted: bool = True,
):
    """MA(q) sequence driven by :func:`white_noise` of length ``N + q + 1``."""
    q = len(coefficients) - 1
    Z = white_noise(sys, N + q, seed, n_paths=_count(n_paths)).values
    W = ma_weights(sys, coefficients, N, haar_weighted)
    values = Z @ W.T
    meta = {"family": sys.family, "coefficients": list(map(float, coefficients)), "haar_weighted": haar_weighted}
    return _wrap(values, n_paths, seed, "ma", meta)


def ma_kernel(sys: PolynomialSystem, coefficients, N: int, haar_weighted: bool = True) -> np.ndarray:
    W = ma_weights(sys, coefficients, N, haar_weighted)
    h_inv = np.exp(-log_haar_weights(sys, W.shape[1] - 1))
    return (W * h_inv) @ W.T


def ma_spectral_density(sys: PolynomialSystem, coefficients, haar_weighted: bool = True) -> Callable:
    """``|sum_k a_k h(k) P_k(x)|^2``, the density of the spectral measure against ``pi``."""
    a = np.asarray(coefficients, dtype=float)
    eff = a * np.exp(log_haar_weights(sys, a.size - 1)) if haar_weighted else a

    def f(x):
        P = sys.evaluate_all(a.size - 1, np.asarray(x, dtype=float))
        return np.abs(np.tensordot(eff, P, axes=1)) ** 2

    return f


# ----------------------------------------------------------------------
# harmonic and general stationary sequences
# ----------------------------------------------------------------------
def _psd_sqrt(cov: np.ndarray) -> np.ndarray:
    w, V = np.linalg.eigh(cov)
    if w[0] < -1e-10 * max(1.0, abs(w[-1])):
        raise ValueError("amplitude covariance is not positive semidefinite")
    return V * np.sqrt(np.clip(w, 0.0, None))


def harmonic_sequence(
    sys: PolynomialSystem,
    atoms: Sequence[float],
    cov,
    N: int,
    seed: int | None = None,
    n_paths: int | None = None,
):
    """``X_n = sum_k P_n(x_k) A_k`` with Gaussian amplitudes of covariance ``cov``."""
    x = np.asarray(atoms, dtype=float)
    cov = np.asarray(cov, dtype=float)
    if cov.shape != (x.size, x.size):
        raise ValueError("covariance must be s x s for s atoms")
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((_count(n_paths), x.size)) @ _psd_sqrt(cov).T
    values = A @ sys.evaluate_all(N, x).T
    return _wrap(values, n_paths, seed, "harmonic", {"atoms": x.tolist()})


def harmonic_kernel(sys: PolynomialSystem, atoms, cov, N: int) -> np.ndarray:
    V = sys.evaluate_all(N, np.asarray(atoms, dtype=float))
    return V @ np.asarray(cov) @ V.T


HARMONIC_DEMO_ATOMS = (-1.0 / 3.0, 0.5)


def harmonic_demo(sys: PolynomialSystem, N: int, seed: int | None = None, n_paths: int | None = None):
    """``X_n = P_n(-1/3) Z_0 + P_n(1/2) Z_1`` with independent unit amplitudes."""
    return harmonic_sequence(sys, HARMONIC_DEMO_ATOMS, np.eye(2), N, seed, n_paths)


def stationary_sequence(
    sys: PolynomialSystem, mu: SpectralMeasure, N: int, seed: int | None = None, n_paths: int | None = None
):
    """Stationary sequence with spectral measure ``mu``.

    Continuous parts are atomized on a Gauss rule exact to degree ``2N``,
    so the simulated covariance equals ``int P_n P_m dmu`` up to rounding.
    """
    x, m = atomize(mu, sys, 2 * N)
    rng = np.random.default_rng(seed)
    amps = rng.standard_normal((_count(n_paths), x.size)) * np.sqrt(m)
    values = amps @ sys.evaluate_all(N, x).T
    return _wrap(values, n_paths, seed, "stationary", {"family": sys.family, "measure": mu.label})


def stationary_kernel(sys: PolynomialSystem, mu: SpectralMeasure, N: int) -> np.ndarray:
    return gram_from_measure(mu, sys, N)


def radial_tree_sequence(q: float, mu: SpectralMeasure, N: int, seed: int | None = None, n_paths: int | None = None):
    """Radial stationary process on a homogeneous tree of degree ``q``, ``X_n`` at distance ``n``."""
    out = stationary_sequence(cartier_dunau(q), mu, N, seed, n_paths)
    object.__setattr__(out, "tag", "radial_tree")
    return out


def truncate(path: Path | PathBatch, A: Sequence[int]):
    """Set ``X_n = 0`` for ``n`` outside ``A``."""
    keep = np.zeros(path.values.shape[-1], dtype=bool)
    idx = [a for a in A if 0 <= a < keep.size]
    keep[idx] = True
    values = np.where(keep, path.values, 0)
    cls = type(path)
    return cls(values, path.seed, path.tag + "+truncated", dict(path.meta))


# ----------------------------------------------------------------------
# averaging classical sequences
# ----------------------------------------------------------------------
AVERAGING_MODES = ("chebU", "chebU_imag", "chebT", "jacobi_mean", "jacobi_increment")


def _max_index(mode: str, N: int) -> int:
    return N + 1 if mode in ("chebU_imag", "jacobi_increment") else N


def averaging_weights(mode: str, N: int, L: int | None = None) -> np.ndarray:
    """Matrix ``alpha`` with ``X_n = sum_j alpha[n, j] Y_{j - L}`` for ``n <= N``.

    Modes
    -----
    ``chebU``: ``(n+1)^{-1} sum_{k=0}^n Y_{n-2k}`` (Chebyshev, second kind).
    ``chebU_imag``: ``(Y_{n+1} - Y_{-n-1}) / (2i (n+1))`` (second kind).
    ``chebT``: ``(Y_n + Y_{-n}) / 2`` (first kind).
    ``jacobi_mean``: ``(2n+1)^{-1} sum_{|k|<=n} Y_k`` (Jacobi(1/2, -1/2)).
    ``jacobi_increment``: ``(Y_{n+1} - Y_{-n}) / (2n+1)`` for ``Y`` with
    stationary increments (Jacobi(1/2, -1/2)).
    """
    if mode not in AVERAGING_MODES:
        raise ValueError(f"unknown averaging mode {mode!r}; choose from {AVERAGING_MODES}")
    need = _max_index(mode, N)
    L = need if L is None else L
    if L < need:
        raise IndexOutOfRange(f"mode {mode} needs Y_{{-{need}}} .. Y_{{{need}}}")
    alpha = np.zeros((N + 1, 2 * L + 1), dtype=complex if mode == "chebU_imag" else float)
    for n in range(N + 1):
        if mode == "chebU":
            alpha[n, L + n - 2 * np.arange(n + 1)] += 1.0 / (n + 1)
        elif mode == "chebU_imag":
            alpha[n, L + n + 1] += 1.0 / (2j * (n + 1))
            alpha[n, L - n - 1] -= 1.0 / (2j * (n + 1))
        elif mode == "chebT":
            alpha[n, L + n] += 0.5
            alpha[n, L - n] += 0.5
        elif mode == "jacobi_mean":
            alpha[n, L - n : L + n + 1] = 1.0 / (2 * n + 1)
        else:
            alpha[n, L + n + 1] += 1.0 / (2 * n + 1)
            alpha[n, L - n] -= 1.0 / (2 * n + 1)
    return alpha


def average_classical(y, mode: str, N: int | None = None):
    """Average a classical sequence ``Y_{-L} .. Y_L`` (centered array, odd length).

    ``y`` may be a single sequence or a 2-D stack (one per row).
    """
    y = np.asarray(y)
    if y.shape[-1] % 2 != 1:
        raise ValueError("the classical sequence must be centered: Y_{-L} .. Y_L")
    L = (y.shape[-1] - 1) // 2
    if N is None:
        N = L - 1 if mode in ("chebU_imag", "jacobi_increment") else L
    alpha = averaging_weights(mode, N, L)
    values = y @ alpha.T
    if y.ndim == 1:
        return Path(values, None, f"average:{mode}")
    return PathBatch(values, None, f"average:{mode}")


def classical_ma(coefficients, L: int, seed: int | None = None, n_paths: int | None = None) -> np.ndarray:
    """Classical ``Y_n = sum_j c_j eps_{n-j}`` for ``n = -L .. L`` (centered array)."""
    c = np.asarray(coefficients, dtype=float)
    rng = np.random.default_rng(seed)
    eps = rng.standard_normal((_count(n_paths), 2 * L + c.size))
    Y = np.stack([np.convolve(e, c, mode="valid") for e in eps])
    return Y[0] if n_paths is None else Y


def classical_ma_covariance(coefficients, L: int) -> np.ndarray:
    """Covariance ``E Y_j Y_k`` of :func:`classical_ma` on ``-L .. L``."""
    c = np.asarray(coefficients, dtype=float)
    q = c.size - 1
    acf = np.array([c[: c.size - k] @ c[k:] for k in range(c.size)])
    idx = np.arange(2 * L + 1)
    lag = np.abs(idx[:, None] - idx[None, :])
    return np.where(lag <= q, acf[np.minimum(lag, q)], 0.0)


def random_walk(L: int, seed: int | None = None, n_paths: int | None = None) -> np.ndarray:
    """``Y_0 = 0`` and unit Gaussian increments in both directions, ``n = -L .. L``."""
    rng = np.random.default_rng(seed)
    eps = rng.standard_normal((_count(n_paths), 2 * L))
    Y = np.zeros((eps.shape[0], 2 * L + 1))
    Y[:, L + 1 :] = np.cumsum(eps[:, L:], axis=1)
    Y[:, :L] = -np.cumsum(eps[:, :L][:, ::-1], axis=1)[:, ::-1]
    return Y[0] if n_paths is None else Y


def random_walk_covariance(L: int) -> np.ndarray:
    """``E Y_j Y_k`` for :func:`random_walk` (``Y_j = sum`` of the increments between 0 and ``j``)."""
    j = np.arange(-L, L + 1)
    same = np.sign(j)[:, None] * np.sign(j)[None, :] > 0
    return np.where(same, np.minimum(np.abs(j)[:, None], np.abs(j)[None, :]), 0).astype(float)


def averaged_kernel(mode: str, cov_y: np.ndarray, N: int) -> np.ndarray:
    """``alpha C_Y alpha^*`` for a classical covariance on ``-L .. L``."""
    L = (cov_y.shape[0] - 1) // 2
    alpha = averaging_weights(mode, N, L)
    return alpha @ cov_y @ alpha.conj().T


# ----------------------------------------------------------------------
# density-estimation coefficients
# ----------------------------------------------------------------------
def density_coefficients(samples, sys: PolynomialSystem, k_max: int) -> np.ndarray:
    """``C_k = N^{-1} sum_j P_k(X_j)`` for ``k <= k_max``.

    ``samples`` of shape ``(N,)`` gives a vector; shape ``(n_paths, N)``
    gives one row per sample set.
    """
    s = np.asarray(samples, dtype=float)
    P = sys.evaluate_all(k_max, s)  # (k_max+1,) + s.shape
    return np.moveaxis(P.mean(axis=-1), 0, -1)


def sample_from_density(
    sys: PolynomialSystem,
    f: Callable[[np.ndarray], np.ndarray],
    N: int,
    seed: int | None = None,
    n_paths: int | None = None,
    n_grid: int = 20001,
) -> np.ndarray:
    """Draw from ``f pi`` by inverting its distribution function.

    The CDF is tabulated in ``t`` with ``x = c - r cos t`` (which removes
    square-root endpoint singularities) and inverted by linear
    interpolation.
    """
    if not sys.has_pi_density:
        raise NoDensity(f"{sys.family}: no closed-form density for pi")
    lo, hi = sys.pi_support
    c, r = (hi + lo) / 2, (hi - lo) / 2
    t = np.linspace(0.0, np.pi, n_grid)
    x = c - r * np.cos(t)
    inner = slice(1, -1)
    dens = np.zeros_like(t)
    dens[inner] = np.asarray(f(x[inner]), dtype=float) * sys.pi_density(x[inner]) * r * np.sin(t[inner])
    if np.any(dens < 0):
        raise ValueError("density must be non-negative")
    cdf = np.concatenate(([0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(t))))
    cdf /= cdf[-1]
    rng = np.random.default_rng(seed)
    u = rng.random((_count(n_paths), N))
    samples = np.interp(u, cdf, x)
    return samples[0] if n_paths is None else samples


def density_coefficient_kernel(sys: PolynomialSystem, f: Callable, N: int, k_max: int) -> np.ndarray:
    """Exact ``E C_m C_n`` for ``N`` independent draws from ``f pi``.

    ``E C_m C_n = N^{-1} int P_m P_n f dpi + (1 - N^{-1}) d(m) d(n)``
    with ``d(k) = int P_k f dpi``.  For ``N = 1`` this is the stationary
    kernel of ``f pi``.
    """
    mu = SpectralMeasure(density_vs_pi=f)
    G = gram_from_measure(mu, sys, k_max)
    d = moments(mu, sys, k_max)
    return G / N + (1.0 - 1.0 / N) * np.outer(d, d)
