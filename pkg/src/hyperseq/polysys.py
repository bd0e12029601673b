"""Orthogonal polynomial systems in hypergroup normalization.

Every system is described by recurrence coefficients ``(a_n, b_n, c_n)`` with

    P_0 = 1,   P_1 = (x - b_0) / a_0,
    P_1 P_n = a_n P_{n+1} + b_n P_n + c_n P_{n-1}      (n >= 1),

so that ``P_n(1) = 1`` for all ``n``.  The equivalent recurrence for plain
multiplication by ``x`` reads ``x P_n = A_n P_{n+1} + B_n P_n + C_n P_{n-1}``
with ``A_0 = a_0``, ``B_0 = b_0``, ``C_0 = 0`` and ``A_n = a_0 a_n``,
``B_n = a_0 b_n + b_0``, ``C_n = a_0 c_n`` for ``n >= 1``.  Downstream
algorithms working with moments use the second form.
"""

from __future__ import annotations

import math
import threading
from typing import Any, Callable

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.special import gammaln

from .errors import ParameterOutOfRange

CoefFn = Callable[[int], tuple[float, float, float]]

_SUM_TOL = 1e-12

FAMILY_ALIASES = {
    "chebyshev1": "ChebyshevFirst",
    "chebyshevfirst": "ChebyshevFirst",
    "chebyshev2": "ChebyshevSecond",
    "chebyshevsecond": "ChebyshevSecond",
    "jacobi": "Jacobi",
    "cartier_dunau": "CartierDunau",
    "cartierdunau": "CartierDunau",
    "tree": "CartierDunau",
    "bernstein_szego": "BernsteinSzego",
    "bernsteinszego": "BernsteinSzego",
}


class PolynomialSystem:
    """One orthogonal polynomial family normalized by ``P_n(1) = 1``.

    Instances are immutable after construction.  Internally they grow
    caches of recurrence coefficients and quadrature rules; the caches are
    guarded by a lock and only ever replaced by complete, larger arrays, so
    concurrent readers see consistent data.

    Parameters
    ----------
    family : str
        Family tag, e.g. ``"ChebyshevFirst"`` or ``"Custom"``.
    params : dict
        Family parameters (empty for parameter-free families).
    coef_fn : callable
        ``n -> (a_n, b_n, c_n)``; for ``n = 0`` it returns ``(a_0, b_0, 0)``.
    support : (float, float)
        The closed interval ``D_s`` on which ``|P_n| <= 1``.
    pi_support : (float, float)
        Interval carrying the orthogonalization measure ``pi``.
    pi_density : callable, optional
        Lebesgue density of ``pi`` on ``pi_support``.
    pi_exponents : (float, float)
        Endpoint exponents of ``pi``'s density (used as a descriptor only).
    even : bool
        True when ``b_n = 0`` for every ``n`` (symmetric ``pi``).
    validate : bool
        Check the hypergroup sign and sum constraints on every coefficient.
    """

    def __init__(
        self,
        family: str,
        params: dict[str, float],
        coef_fn: CoefFn,
        support: tuple[float, float] = (-1.0, 1.0),
        pi_support: tuple[float, float] | None = None,
        pi_density: Callable[[np.ndarray], np.ndarray] | None = None,
        pi_exponents: tuple[float, float] | None = None,
        even: bool = False,
        validate: bool = True,
    ):
        self.family = family
        self.params = dict(params)
        self._coef_fn = coef_fn
        self.support = (float(support[0]), float(support[1]))
        self.pi_support = self.support if pi_support is None else (float(pi_support[0]), float(pi_support[1]))
        self._pi_density = pi_density
        self.pi_exponents = pi_exponents
        self.even = even
        self._validate = validate
        self._lock = threading.Lock()
        self._coefs = np.zeros((3, 0))
        self._gauss: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        # Scratch space for memo tables owned by other modules (keyed by name).
        self.memo: dict[str, Any] = {}
        self.memo_lock = threading.RLock()

    # ------------------------------------------------------------------
    # recurrence coefficients
    # ------------------------------------------------------------------
    def _check(self, n: int, a: float, b: float, c: float) -> None:
        if not all(math.isfinite(v) for v in (a, b, c)):
            raise ParameterOutOfRange(f"{self.family}: non-finite coefficient at n={n}")
        if n == 0:
            if a <= 0 or abs(a + b - 1.0) > _SUM_TOL:
                raise ParameterOutOfRange(f"{self.family}: need a_0 > 0 and a_0 + b_0 = 1, got ({a}, {b})")
            return
        if a <= 0 or c <= 0 or b < -_SUM_TOL or abs(a + b + c - 1.0) > _SUM_TOL:
            raise ParameterOutOfRange(
                f"{self.family}: coefficients ({a}, {b}, {c}) at n={n} violate "
                "a_n > 0, c_n > 0, b_n >= 0, a_n + b_n + c_n = 1"
            )

    def coefficients(self, n_max: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Arrays ``a, b, c`` of length ``n_max + 1`` (``c[0] = 0``)."""
        if n_max < 0:
            raise ValueError("n_max must be non-negative")
        coefs = self._coefs
        if coefs.shape[1] <= n_max:
            with self._lock:
                coefs = self._coefs
                if coefs.shape[1] <= n_max:
                    size = max(n_max + 1, 2 * coefs.shape[1], 16)
                    new = np.empty((3, size))
                    new[:, : coefs.shape[1]] = coefs
                    for n in range(coefs.shape[1], size):
                        a, b, c = (float(v) for v in self._coef_fn(n))
                        if n == 0:
                            c = 0.0
                        if self._validate:
                            self._check(n, a, b, c)
                        new[:, n] = (a, b, c)
                    self._coefs = coefs = new
        return coefs[0, : n_max + 1], coefs[1, : n_max + 1], coefs[2, : n_max + 1]

    def plain_coefficients(self, n_max: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Arrays ``A, B, C`` of ``x P_n = A_n P_{n+1} + B_n P_n + C_n P_{n-1}``."""
        a, b, c = self.coefficients(n_max)
        a0, b0 = a[0], b[0]
        A = a0 * a
        B = a0 * b + b0
        C = a0 * c
        A[0], B[0], C[0] = a0, b0, 0.0
        return A, B, C

    def recurrence(self, n: int) -> tuple[float, float, float]:
        a, b, c = self.coefficients(n)
        return float(a[n]), float(b[n]), float(c[n])

    # ------------------------------------------------------------------
    # evaluation
    # ------------------------------------------------------------------
    def evaluate_all(self, n_max: int, x) -> np.ndarray:
        """Values ``P_0(x) .. P_{n_max}(x)`` stacked along a new first axis."""
        x = np.asarray(x, dtype=float)
        A, B, C = self.plain_coefficients(max(n_max, 1))
        out = np.empty((n_max + 1,) + x.shape)
        out[0] = 1.0
        if n_max >= 1:
            out[1] = (x - B[0]) / A[0]
        for k in range(1, n_max):
            out[k + 1] = ((x - B[k]) * out[k] - C[k] * out[k - 1]) / A[k]
        return out

    def evaluate(self, n: int, x):
        """``P_n(x)`` by forward recurrence (scalar or array ``x``)."""
        if n < 0:
            raise ValueError("degree must be non-negative")
        x_arr = np.asarray(x, dtype=float)
        A, B, C = self.plain_coefficients(max(n, 1))
        prev = np.ones_like(x_arr)
        if n == 0:
            cur = prev
        else:
            cur = (x_arr - B[0]) / A[0]
            for k in range(1, n):
                prev, cur = cur, ((x_arr - B[k]) * cur - C[k] * prev) / A[k]
        return float(cur) if np.ndim(x) == 0 else cur

    def leading_coefficient_logs(self, n_max: int) -> np.ndarray:
        """``ln sigma_k`` for ``k <= n_max`` where ``P_k = sigma_k x^k + ...``."""
        A, _, _ = self.plain_coefficients(max(n_max, 1))
        out = np.zeros(n_max + 1)
        out[1:] = -np.cumsum(np.log(A[:n_max]))
        return out

    # ------------------------------------------------------------------
    # orthogonalization measure
    # ------------------------------------------------------------------
    def gauss_rule(self, n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
        """Gauss nodes and weights for ``pi`` (exact to degree ``2 n_nodes - 1``).

        Built by Golub-Welsch from the symmetrized Jacobi matrix of the
        recurrence, so it is available for every system, custom ones
        included.
        """
        rule = self._gauss.get(n_nodes)
        if rule is None:
            A, B, C = self.plain_coefficients(n_nodes)
            off = np.sqrt(A[: n_nodes - 1] * C[1:n_nodes])
            if n_nodes == 1:
                nodes, vecs = np.array([B[0]]), np.ones((1, 1))
            else:
                nodes, vecs = eigh_tridiagonal(B[:n_nodes], off)
            weights = vecs[0] ** 2
            weights /= weights.sum()
            rule = (nodes, weights)
            self._gauss[n_nodes] = rule
        return rule

    @property
    def has_pi_density(self) -> bool:
        return self._pi_density is not None

    def pi_density(self, x) -> np.ndarray:
        """Lebesgue density of ``pi`` (zero outside ``pi_support``)."""
        if self._pi_density is None:
            raise NotImplementedError(f"{self.family}: no closed-form density for pi")
        x = np.asarray(x, dtype=float)
        lo, hi = self.pi_support
        out = np.zeros_like(x)
        inside = (x > lo) & (x < hi)
        out[inside] = self._pi_density(x[inside])
        return out

    # ------------------------------------------------------------------
    # serialization
    # ------------------------------------------------------------------
    def descriptor(self) -> dict[str, Any]:
        if self.family == "Custom":
            raise ValueError("custom systems cannot be serialized")
        return {"family": self.family, **self.params}

    def __repr__(self) -> str:
        inner = ", ".join(f"{k}={v!r}" for k, v in self.params.items())
        return f"{self.family}({inner})"


# ----------------------------------------------------------------------
# module-level API
# ----------------------------------------------------------------------
def recurrence(sys: PolynomialSystem, n: int) -> tuple[float, float, float]:
    """Normalized recurrence coefficients ``(a_n, b_n, c_n)``."""
    if n < 0:
        raise ValueError("n must be non-negative")
    return sys.recurrence(n)


def evaluate(sys: PolynomialSystem, n: int, x):
    """``P_n(x)`` by forward recurrence."""
    return sys.evaluate(n, x)


def leading_coefficient_log(sys: PolynomialSystem, n: int) -> float:
    """``ln sigma_n`` with ``P_n(x) = sigma_n x^n + ...``."""
    return float(sys.leading_coefficient_logs(n)[n])


# ----------------------------------------------------------------------
# built-in families
# ----------------------------------------------------------------------
def chebyshev_first() -> PolynomialSystem:
    def coef(n: int):
        return (1.0, 0.0, 0.0) if n == 0 else (0.5, 0.0, 0.5)

    return PolynomialSystem(
        "ChebyshevFirst",
        {},
        coef,
        pi_density=lambda x: 1.0 / (math.pi * np.sqrt(1.0 - x * x)),
        pi_exponents=(-0.5, -0.5),
        even=True,
    )


def _jacobi_plain(alpha: float, beta: float) -> Callable[[int], tuple[float, float, float]]:
    s = alpha + beta

    def plain(n: int) -> tuple[float, float, float]:
        if n == 0:
            A = 2.0 * (alpha + 1.0) / (s + 2.0)
            return A, 1.0 - A, 0.0
        A = 2.0 * (n + s + 1.0) * (n + alpha + 1.0) / ((2 * n + s + 1.0) * (2 * n + s + 2.0))
        C = 2.0 * n * (n + beta) / ((2 * n + s) * (2 * n + s + 1.0))
        B = (beta * beta - alpha * alpha) / ((2 * n + s) * (2 * n + s + 2.0))
        return A, B, C

    return plain


def jacobi(alpha: float, beta: float) -> PolynomialSystem:
    """Jacobi polynomials ``P_n^{(alpha,beta)}(x) / P_n^{(alpha,beta)}(1)``.

    Accepted parameters: ``alpha >= beta > -1`` and ``alpha + beta + 1 >= 0``.
    """
    alpha, beta = float(alpha), float(beta)
    if not (alpha >= beta > -1.0 and alpha + beta + 1.0 >= 0.0):
        raise ParameterOutOfRange(
            f"Jacobi({alpha}, {beta}) needs alpha >= beta > -1 and alpha + beta + 1 >= 0"
        )
    plain = _jacobi_plain(alpha, beta)
    a0, b0, _ = plain(0)

    def coef(n: int):
        if n == 0:
            return a0, b0, 0.0
        A, B, C = plain(n)
        return A / a0, (B - b0) / a0, C / a0

    log_norm = (
        gammaln(alpha + beta + 2.0)
        - (alpha + beta + 1.0) * math.log(2.0)
        - gammaln(alpha + 1.0)
        - gammaln(beta + 1.0)
    )
    norm = math.exp(log_norm)

    def density(x):
        return norm * (1.0 - x) ** alpha * (1.0 + x) ** beta

    family = "ChebyshevSecond" if alpha == beta == 0.5 else "Jacobi"
    params = {} if family == "ChebyshevSecond" else {"alpha": alpha, "beta": beta}
    if alpha == beta == -0.5:
        return chebyshev_first()
    return PolynomialSystem(
        family, params, coef, pi_density=density, pi_exponents=(alpha, beta), even=(alpha == beta)
    )


def chebyshev_second() -> PolynomialSystem:
    """Normalized ``U_n(x) / (n + 1)``, i.e. Jacobi(1/2, 1/2)."""
    return jacobi(0.5, 0.5)


def cartier_dunau(q: float) -> PolynomialSystem:
    """Radial polynomials of a homogeneous tree in which every vertex has ``q + 1`` neighbours."""
    q = float(q)
    if not q >= 1.0:
        raise ParameterOutOfRange(f"CartierDunau needs q >= 1, got {q}")
    a = q / (q + 1.0)
    c = 1.0 / (q + 1.0)
    gamma = 2.0 * math.sqrt(q) / (q + 1.0)

    def coef(n: int):
        return (1.0, 0.0, 0.0) if n == 0 else (a, 0.0, c)

    def density(x):
        return (q + 1.0) * np.sqrt(np.maximum(gamma * gamma - x * x, 0.0)) / (2.0 * math.pi * (1.0 - x * x))

    return PolynomialSystem(
        "CartierDunau",
        {"q": q},
        coef,
        pi_support=(-gamma, gamma),
        pi_density=density,
        pi_exponents=(0.5, 0.5),
        even=True,
    )


def support_edge(sys: PolynomialSystem) -> float:
    """Right end of the support of ``pi`` (``2 sqrt(q) / (q + 1)`` for trees)."""
    return sys.pi_support[1]


def bernstein_szego(nu: float, kappa: float) -> PolynomialSystem:
    """Polynomials ``(T_n + kappa T_{n-1} + nu T_{n-2}) / (nu + kappa + 1)``.

    The recurrence is constant from ``n = 2`` on; the coefficients for
    ``n = 0, 1`` follow from expanding ``P_1 P_1`` in Chebyshev polynomials.
    """
    nu, kappa = float(nu), float(kappa)
    if not (nu >= 0.0 and kappa >= 0.0 and kappa - 1.0 < nu < 1.0):
        raise ParameterOutOfRange(
            f"BernsteinSzego({nu}, {kappa}) needs nu, kappa >= 0 and kappa - 1 < nu < 1"
        )
    s = nu + kappa + 1.0

    def coef(n: int):
        if n == 0:
            return s / (nu + 1.0), -kappa / (nu + 1.0), 0.0
        if n == 1:
            return (
                (nu + 1.0) ** 2 / (2.0 * s),
                kappa * (3.0 - nu) / (2.0 * s),
                (1.0 - nu) * (nu + 1.0 - kappa) / (2.0 * s),
            )
        return (nu + 1.0) / (2.0 * s), kappa / s, (nu + 1.0) / (2.0 * s)

    def g(x):
        t = np.arccos(np.clip(x, -1.0, 1.0))
        return np.abs(nu * np.exp(2j * t) + kappa * np.exp(1j * t) + 1.0) ** 2

    # Normalize with the periodic trapezoid rule in t (spectrally accurate).
    t = (np.arange(4096) + 0.5) * math.pi / 4096
    norm = 1.0 / (math.pi * np.mean(1.0 / g(np.cos(t))))

    def density(x):
        return norm / (g(x) * np.sqrt(1.0 - x * x))

    # b_0 < 0 is allowed: only b_n for n >= 1 must be non-negative.
    return PolynomialSystem(
        "BernsteinSzego",
        {"nu": nu, "kappa": kappa},
        coef,
        pi_density=density,
        pi_exponents=(-0.5, -0.5),
        even=(kappa == 0.0),
    )


def custom(
    coef_fn: CoefFn,
    support: tuple[float, float],
    pi_density: Callable[[np.ndarray], np.ndarray] | None = None,
    pi_support: tuple[float, float] | None = None,
    even: bool = False,
) -> PolynomialSystem:
    """System from a user coefficient function; validity is checked lazily."""
    return PolynomialSystem(
        "Custom", {}, coef_fn, support=support, pi_support=pi_support, pi_density=pi_density, even=even
    )


def from_descriptor(desc: dict[str, Any] | str) -> PolynomialSystem:
    """Build a system from ``{"family": ..., params...}`` or a bare family name."""
    if isinstance(desc, str):
        desc = {"family": desc}
    desc = dict(desc)
    raw = str(desc.pop("family"))
    name = FAMILY_ALIASES.get(raw.lower(), raw)
    try:
        if name == "ChebyshevFirst":
            return chebyshev_first()
        if name == "ChebyshevSecond":
            return chebyshev_second()
        if name == "Jacobi":
            return jacobi(desc["alpha"], desc["beta"])
        if name == "CartierDunau":
            return cartier_dunau(desc["q"])
        if name == "BernsteinSzego":
            return bernstein_szego(desc["nu"], desc["kappa"])
    except KeyError as exc:
        raise ParameterOutOfRange(f"{name}: missing parameter {exc.args[0]!r}") from None
    raise ParameterOutOfRange(f"unknown or non-serializable family {raw!r}")


# ----------------------------------------------------------------------
# diagnostic-only family
# ----------------------------------------------------------------------
class AssociatedUltraspherical:
    """Haar-weight and leading-coefficient formulas for associated ultraspherical polynomials.

    Only closed-form diagnostics are offered; no recurrence is exposed, so
    the family cannot be simulated or used for prediction.
    """

    def __init__(self, alpha: float, nu: float):
        if not (alpha > -0.5 and nu >= 0.0):
            raise ParameterOutOfRange("AssociatedUltraspherical needs alpha > -1/2 and nu >= 0")
        if alpha == 0.0:
            raise ParameterOutOfRange("the Haar formula is singular at alpha = 0")
        self.alpha = float(alpha)
        self.nu = float(nu)

    @staticmethod
    def _log_poch(x: float, n: int) -> float:
        return float(gammaln(x + n) - gammaln(x))

    def haar_weight(self, n: int) -> float:
        al, nu = self.alpha, self.nu
        # Write (2a+nu)_{n+1} = (2a+nu) u and (nu)_{n+1} = nu v with u, v > 0,
        # so the squared difference over u v needs only the ratio u / v.
        r = self._log_poch(2 * al + nu + 1, n) - self._log_poch(nu + 1, n)
        core = ((2 * al + nu) * math.exp(r / 2) - nu * math.exp(-r / 2)) ** 2
        return (2 * n + 2 * al + 2 * nu + 1) * core / (4 * al * al * (2 * al + 2 * nu + 1))

    def orthonormal_leading_log(self, n: int) -> float:
        """``ln rho_n(pi)``, the log leading coefficient of the orthonormal polynomial."""
        al, nu = self.alpha, self.nu
        return n * math.log(2.0) + 0.5 * (
            self._log_poch(nu + al + 1.5, n)
            + self._log_poch(nu + al + 0.5, n)
            - self._log_poch(nu + 1, n)
            - self._log_poch(nu + 2 * al + 1, n)
        )

    def orthonormal_leading_limit_log(self) -> float:
        """``lim ln(rho_n(pi) / 2^n)``."""
        al, nu = self.alpha, self.nu
        return 0.5 * float(
            gammaln(nu + 1) + gammaln(nu + 2 * al + 1) - gammaln(nu + al + 1.5) - gammaln(nu + al + 0.5)
        )

    @property
    def haar_growth_exponent(self) -> float:
        return 2 * self.alpha + 1

