"""Spectral measures on the dual space and bimeasures on its square.

A :class:`SpectralMeasure` is a finite sum of point masses, a density
against the orthogonalization measure ``pi`` and a plain Lebesgue density.
Moments ``d(n) = int P_n dmu`` are computed with Gauss rules: the rule for
``pi`` comes from the recurrence (Golub-Welsch), the Lebesgue part uses
Gauss-Legendre after the substitution ``x = c + r cos t``, which absorbs
square-root endpoint behaviour.

A :class:`BiMeasure` carries complex atoms ``(x, y, w)`` plus optional
separable terms ``w f(x) g(y) dpi(x) dpi(y)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .errors import NonAtomicUnsupported, NonHermitian, NotPositive, QuadratureUnderresolved
from .hyperconv import haar_weights
from .polysys import PolynomialSystem

Density = Callable[[np.ndarray], np.ndarray]

QUAD_MARGIN = 16
_ATOM_TOL = 1e-12


def default_nodes(n_max: int) -> int:
    return 2 * n_max + 32


@dataclass(frozen=True)
class SpectralMeasure:
    """Positive measure ``sum m_i delta_{x_i} + f pi + g dx``.

    Parameters
    ----------
    atoms : sequence of (x, mass)
    density_vs_pi : callable, optional
        Non-negative ``f`` so that ``f pi`` is a component.
    density_vs_dx : callable, optional
        Non-negative Lebesgue density ``g``.
    n_quad : int, optional
        Fixed node count for the continuous parts.  By default the rule
        grows with the requested degree (``2 n + 32`` nodes).
    """

    atoms: tuple[tuple[float, float], ...] = ()
    density_vs_pi: Density | None = None
    density_vs_dx: Density | None = None
    n_quad: int | None = None
    label: str = ""

    def __post_init__(self):
        atoms = tuple((float(x), float(m)) for x, m in self.atoms)
        if any(m < 0 for _, m in atoms):
            raise ValueError("atom masses must be non-negative")
        object.__setattr__(self, "atoms", atoms)
        if not atoms and self.density_vs_pi is None and self.density_vs_dx is None:
            raise ValueError("a spectral measure needs atoms or a density")

    @property
    def has_density(self) -> bool:
        return self.density_vs_pi is not None or self.density_vs_dx is not None

    def scaled(self, factor: float) -> SpectralMeasure:
        f, g = self.density_vs_pi, self.density_vs_dx
        return SpectralMeasure(
            tuple((x, factor * m) for x, m in self.atoms),
            None if f is None else (lambda x, f=f: factor * f(x)),
            None if g is None else (lambda x, g=g: factor * g(x)),
            self.n_quad,
            self.label,
        )

    def __add__(self, other: SpectralMeasure) -> SpectralMeasure:
        def add(f, g):
            if f is None:
                return g
            if g is None:
                return f
            return lambda x: f(x) + g(x)

        return SpectralMeasure(
            self.atoms + other.atoms,
            add(self.density_vs_pi, other.density_vs_pi),
            add(self.density_vs_dx, other.density_vs_dx),
            None if self.n_quad is None or other.n_quad is None else max(self.n_quad, other.n_quad),
            f"{self.label}+{other.label}",
        )


def orthogonalization_measure(scale: float = 1.0) -> SpectralMeasure:
    """``scale * pi`` for whatever system the measure is later paired with."""
    return SpectralMeasure(density_vs_pi=lambda x: np.full_like(x, scale, dtype=float), label="pi")


def point_mass(x: float, mass: float = 1.0) -> SpectralMeasure:
    return SpectralMeasure(atoms=((x, mass),), label=f"delta({x})")


def polynomial_times_pi(coeffs: Sequence[float]) -> SpectralMeasure:
    """``f pi`` with ``f(x) = sum_i coeffs[i] x^i`` (caller keeps ``f >= 0``)."""
    c = np.asarray(coeffs, dtype=float)
    return SpectralMeasure(density_vs_pi=lambda x: np.polynomial.polynomial.polyval(x, c), label="poly*pi")


# ----------------------------------------------------------------------
# quadrature
# ----------------------------------------------------------------------
def _legendre_t_rule(lo: float, hi: float, n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes/weights for ``int_lo^hi g(x) dx`` via ``x = c + r cos t``."""
    t, w = np.polynomial.legendre.leggauss(n_nodes)
    t = (t + 1.0) * (math.pi / 2)
    w = w * (math.pi / 2)
    c, r = (hi + lo) / 2, (hi - lo) / 2
    return c + r * np.cos(t), w * r * np.sin(t)


def continuous_rule(mu: SpectralMeasure, sys: PolynomialSystem, n_max: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and masses representing the continuous part of ``mu``.

    Raises :class:`QuadratureUnderresolved` when a fixed rule is too small
    for degree ``n_max`` (needs ``2 n_quad - 1 >= n_max + 16``).
    """
    n_nodes = mu.n_quad if mu.n_quad is not None else default_nodes(n_max)
    if mu.n_quad is not None and 2 * n_nodes - 1 < n_max + QUAD_MARGIN:
        raise QuadratureUnderresolved(
            f"rule with {n_nodes} nodes cannot resolve degree {n_max} (+{QUAD_MARGIN} margin)"
        )
    xs, ms = [], []
    if mu.density_vs_pi is not None:
        x, w = sys.gauss_rule(n_nodes)
        xs.append(x)
        ms.append(w * np.asarray(mu.density_vs_pi(x), dtype=float))
    if mu.density_vs_dx is not None:
        x, w = _legendre_t_rule(*sys.support, n_nodes)
        xs.append(x)
        ms.append(w * np.asarray(mu.density_vs_dx(x), dtype=float))
    if not xs:
        return np.zeros(0), np.zeros(0)
    return np.concatenate(xs), np.concatenate(ms)


def atomize(mu: SpectralMeasure, sys: PolynomialSystem, n_max: int) -> tuple[np.ndarray, np.ndarray]:
    """Discrete measure with the same moments as ``mu`` up to degree ``n_max``.

    Atoms are kept; continuous parts are replaced by their quadrature nodes
    with masses ``weight * density``.
    """
    lo, hi = sys.support
    for x, _ in mu.atoms:
        if not (lo - _ATOM_TOL <= x <= hi + _ATOM_TOL):
            raise ValueError(f"atom at {x} lies outside D_s = [{lo}, {hi}]")
    xq, mq = continuous_rule(mu, sys, n_max)
    xa = np.array([x for x, _ in mu.atoms], dtype=float)
    ma = np.array([m for _, m in mu.atoms], dtype=float)
    return np.concatenate([xa, xq]), np.concatenate([ma, mq])


def moments(mu: SpectralMeasure, sys: PolynomialSystem, n_max: int) -> np.ndarray:
    """``d(0) .. d(n_max)`` with ``d(n) = int P_n dmu``."""
    x, m = atomize(mu, sys, n_max)
    V = sys.evaluate_all(n_max, x)
    return V @ m


def moment(mu: SpectralMeasure, sys: PolynomialSystem, n: int) -> float:
    return float(moments(mu, sys, n)[n])


def total_mass(mu: SpectralMeasure, sys: PolynomialSystem) -> float:
    return float(moments(mu, sys, 0)[0])


def gram_from_measure(mu: SpectralMeasure, sys: PolynomialSystem, N: int) -> np.ndarray:
    """``[int P_k P_l dmu]`` by direct quadrature (independent of linearization)."""
    x, m = atomize(mu, sys, 2 * N)
    V = sys.evaluate_all(N, x)
    return (V * m) @ V.T


# ----------------------------------------------------------------------
# Kolmogorov-Szego integral
# ----------------------------------------------------------------------
KS_CUTOFF = -1e3
KS_FLOOR = 1e-300
KS_ZERO_FRACTION = 0.01


def lebesgue_density(mu: SpectralMeasure, sys: PolynomialSystem | None, x: np.ndarray) -> np.ndarray:
    """Absolutely continuous density ``mu'(x)`` (atoms excluded)."""
    out = np.zeros_like(x, dtype=float)
    if mu.density_vs_pi is not None:
        if sys is None:
            raise ValueError("a density against pi needs the polynomial system")
        out += np.asarray(mu.density_vs_pi(x), dtype=float) * sys.pi_density(x)
    if mu.density_vs_dx is not None:
        out += np.asarray(mu.density_vs_dx(x), dtype=float)
    return out


def kolmogorov_szego_integral(
    mu: SpectralMeasure, sys: PolynomialSystem | None = None, n_grid: int = 8192
) -> tuple[float, bool]:
    """``int_{-1}^{1} ln mu'(x) / sqrt(1 - x^2) dx`` and a divergence flag.

    Evaluated as ``int_0^pi ln mu'(cos t) dt`` with the midpoint rule on a
    uniform ``t`` grid.  Point masses are ignored (they are singular).
    The result is flagged divergent when it falls below ``-1e3`` or the
    density is below ``1e-300`` on more than 1% of the nodes; a purely
    atomic measure gives ``(-inf, True)``.
    """
    if sys is not None and (sys.support[0] < -1.0 - 1e-12 or sys.support[1] > 1.0 + 1e-12):
        raise ValueError("the Kolmogorov-Szego integral needs D_s inside [-1, 1]")
    if not mu.has_density:
        return -math.inf, True
    t = (np.arange(n_grid) + 0.5) * (math.pi / n_grid)
    dens = lebesgue_density(mu, sys, np.cos(t))
    tiny = dens < KS_FLOOR
    logs = np.log(np.where(tiny, KS_FLOOR, dens))
    value = float(logs.sum() * (math.pi / n_grid))
    diverged = value < KS_CUTOFF or tiny.mean() > KS_ZERO_FRACTION
    return value, bool(diverged)


# ----------------------------------------------------------------------
# bimeasures
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class SeparableTerm:
    """``weight * f(x) * g(y) dpi(x) dpi(y)``."""

    weight: complex
    f: Density
    g: Density


@dataclass(frozen=True)
class BiMeasure:
    """Complex measure on ``D_s x D_s`` for harmonizable kernels.

    Atoms with equal locations are merged.  Construction enforces
    ``weight(x, y) = conj(weight(y, x))`` and positive semidefiniteness of
    the atom-weight matrix over the distinct support points (tolerance
    ``1e-10``).  Separable terms are trusted as given.
    """

    atoms: tuple[tuple[float, float, complex], ...] = ()
    separable: tuple[SeparableTerm, ...] = ()
    n_quad: int | None = None
    hermitian: bool = field(default=True, init=False)

    def __post_init__(self):
        merged: dict[tuple[float, float], complex] = {}
        for x, y, w in self.atoms:
            key = (float(x), float(y))
            merged[key] = merged.get(key, 0.0) + complex(w)
        atoms = tuple((x, y, w) for (x, y), w in merged.items())
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "separable", tuple(self.separable))
        if not atoms:
            return
        pts = sorted({p for x, y, _ in atoms for p in (x, y)})
        index = {p: i for i, p in enumerate(pts)}
        W = np.zeros((len(pts), len(pts)), dtype=complex)
        for x, y, w in atoms:
            W[index[x], index[y]] = w
        scale = max(1.0, float(np.abs(W).max()))
        if np.abs(W - W.conj().T).max() > 1e-12 * scale:
            raise NonHermitian("bimeasure weights are not hermitian")
        if np.linalg.eigvalsh(W)[0] < -1e-10 * scale:
            raise NotPositive("bimeasure atom-weight matrix is not positive semidefinite")

    @property
    def is_atomic(self) -> bool:
        return not self.separable

    def weight_matrix(self) -> tuple[np.ndarray, np.ndarray]:
        """Distinct support points and the hermitian weight matrix over them."""
        pts = np.array(sorted({p for x, y, _ in self.atoms for p in (x, y)}))
        index = {p: i for i, p in enumerate(pts)}
        W = np.zeros((pts.size, pts.size), dtype=complex)
        for x, y, w in self.atoms:
            W[index[x], index[y]] = w
        return pts, W

    @staticmethod
    def from_spectral(mu: SpectralMeasure, sys: PolynomialSystem, n_max: int) -> BiMeasure:
        """Diagonal lift ``mu(A intersect B)`` (continuous parts atomized)."""
        x, m = atomize(mu, sys, 2 * n_max)
        return BiMeasure(tuple((xi, xi, mi) for xi, mi in zip(x, m) if mi != 0.0))

    @staticmethod
    def product(a: Sequence[tuple[float, float]], b: Sequence[tuple[float, float]] | None = None) -> BiMeasure:
        """Product of two discrete measures given as ``(x, mass)`` lists."""
        b = a if b is None else b
        return BiMeasure(tuple((x, y, mx * my) for x, mx in a for y, my in b))

    @staticmethod
    def from_covariance(points: Sequence[float], cov: np.ndarray) -> BiMeasure:
        """``sum_{k,l} cov[k, l] delta_{(x_k, x_l)}`` (the harmonic-sequence measure)."""
        cov = np.asarray(cov)
        return BiMeasure(
            tuple((points[k], points[l], cov[k, l]) for k in range(len(points)) for l in range(len(points)))
        )


def truncated_bimeasure(sys: PolynomialSystem, d_matrix: np.ndarray, A: Sequence[int]) -> BiMeasure:
    """Separable density of a stationary sequence set to zero outside ``A``.

    ``f(x, y) = sum_{s,t in A} d(s, t) h(s) h(t) P_s(x) P_t(y)`` against
    ``pi x pi``, where ``d_matrix[s, t] = E X_s conj(X_t)``.
    """
    A = sorted(set(int(a) for a in A))
    h = haar_weights(sys, max(A))
    terms = []
    for s in A:
        for t in A:
            w = d_matrix[s, t] * h[s] * h[t]
            if w != 0:
                terms.append(
                    SeparableTerm(w, lambda x, s=s: sys.evaluate(s, x), lambda y, t=t: sys.evaluate(t, y))
                )
    return BiMeasure(separable=tuple(terms), n_quad=max(A) + 64)


def bimoment_matrix(mu2: BiMeasure, sys: PolynomialSystem, N: int, M: int | None = None) -> np.ndarray:
    """``[int P_n(x) P_m(y) dmu2]`` for ``n <= N``, ``m <= M``."""
    M = N if M is None else M
    out = np.zeros((N + 1, M + 1), dtype=complex)
    if mu2.atoms:
        xs = np.array([a[0] for a in mu2.atoms])
        ys = np.array([a[1] for a in mu2.atoms])
        ws = np.array([a[2] for a in mu2.atoms])
        out += (sys.evaluate_all(N, xs) * ws) @ sys.evaluate_all(M, ys).T
    if mu2.separable:
        n_nodes = mu2.n_quad if mu2.n_quad is not None else default_nodes(max(N, M))
        n_nodes = max(n_nodes, (max(N, M) + 1) // 2 + QUAD_MARGIN)
        x, w = sys.gauss_rule(n_nodes)
        Vn = sys.evaluate_all(N, x) * w
        Vm = sys.evaluate_all(M, x) * w
        for term in mu2.separable:
            u = Vn @ np.asarray(term.f(x), dtype=float)
            v = Vm @ np.asarray(term.g(x), dtype=float)
            out += term.weight * np.outer(u, v)
    return out


def bimoment(mu2: BiMeasure, sys: PolynomialSystem, n: int, m: int) -> complex:
    """``int P_n(x) P_m(y) dmu2(x, y)``."""
    return complex(bimoment_matrix(mu2, sys, n, m)[n, m])


def require_atomic(mu2: BiMeasure) -> None:
    if not mu2.is_atomic:
        raise NonAtomicUnsupported("operation defined for purely atomic bimeasures only")


# ----------------------------------------------------------------------
# JSON descriptors
# ----------------------------------------------------------------------
def measure_from_descriptor(desc: dict[str, Any] | str) -> SpectralMeasure:
    """Build a measure from ``{atoms: [{x, mass}], density: {kind, params}, quad: {n}}``.

    Density kinds: ``pi`` (``scale``), ``poly_pi`` (``coeffs`` of ``f``
    in powers of ``x``), ``poly_dx`` (Lebesgue polynomial density).  The
    string ``"pi"`` is shorthand for ``{density: {kind: pi}}``.
    """
    if isinstance(desc, str):
        if desc == "pi":
            return orthogonalization_measure()
        raise ValueError(f"unknown measure shorthand {desc!r}")
    atoms = tuple((float(a["x"]), float(a["mass"])) for a in desc.get("atoms", []))
    dens = desc.get("density")
    f_pi = f_dx = None
    if dens:
        kind = dens.get("kind")
        params = dens.get("params", {})
        if kind == "pi":
            scale = float(params.get("scale", 1.0))
            f_pi = lambda x, s=scale: np.full_like(x, s, dtype=float)  # noqa: E731
        elif kind == "poly_pi":
            c = np.asarray(params["coeffs"], dtype=float)
            f_pi = lambda x, c=c: np.polynomial.polynomial.polyval(x, c)  # noqa: E731
        elif kind == "poly_dx":
            c = np.asarray(params["coeffs"], dtype=float)
            f_dx = lambda x, c=c: np.polynomial.polynomial.polyval(x, c)  # noqa: E731
        else:
            raise ValueError(f"unknown density kind {kind!r}")
    quad = desc.get("quad") or {}
    return SpectralMeasure(atoms, f_pi, f_dx, quad.get("n"), desc.get("label", ""))
