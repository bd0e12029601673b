"""Best linear prediction for stationary sequences on a polynomial hypergroup.

For a stationary sequence with spectral measure ``mu`` the best linear
one-step predictor ``X^_{n+1} = sum_k b_{n,k} X_k`` corresponds to the
polynomial ``sigma_{n+1}(pi) phi_{n+1}``, where ``phi_{n+1}`` is the monic
orthogonal polynomial of ``mu``:

    b_{n,k} = -sigma_{n+1}(pi) c_{phi P}(n + 1, k),
    delta_n = sigma_{n+1}(pi) ||phi_{n+1}||_mu.

Errors are carried as logarithms so that ``n`` in the hundreds is fine.
The module also offers the Gram-determinant route to ``delta_n`` (a
brute-force oracle), multi-step errors, Turan determinants, a report on
which sufficient condition (if any) makes ``delta_n -> 0``, and the
moving-average predictor that also observes the first ``q`` innovations.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

from .errors import IndexOutOfRange, MeasureDegenerate, ParameterOutOfRange
from .hyperconv import linearize, log_haar_weights, translation_matrix
from .measures import SpectralMeasure, kolmogorov_szego_integral, moments
from .opseq import (
    MonicChain,
    connection_from_measure,
    connection_to_orthonormal,
    modified_chebyshev,
)
from .polysys import PolynomialSystem


@dataclass(frozen=True)
class Predictor:
    """One-step predictor of order ``n``.

    Attributes
    ----------
    n : int
        Uses ``X_0 .. X_n`` to predict ``X_{n+1}``.
    coefficients : ndarray
        ``b_{n,0} .. b_{n,n}``.
    log_error : float
        ``ln delta_n`` (``-inf`` when the prediction is exact).
    chain : MonicChain
    """

    n: int
    coefficients: np.ndarray
    log_error: float
    chain: MonicChain = field(repr=False)

    @property
    def error(self) -> float:
        return math.exp(self.log_error) if self.log_error > -math.inf else 0.0

    def predict(self, x) -> complex | float:
        """``sum_k b_{n,k} x_k`` for observed values ``x_0 .. x_n``."""
        x = np.asarray(x)
        if x.shape[0] < self.n + 1:
            raise IndexOutOfRange(f"order-{self.n} predictor needs {self.n + 1} observations")
        return self.coefficients @ x[: self.n + 1]

    def normal_equation_residual(self, d) -> float:
        """``max |Phi b - phi| / max |phi|`` for the Gram system built from ``d``."""
        G = translation_matrix(self.chain.sys, d, self.n + 1)
        Phi, phi = G[: self.n + 1, : self.n + 1], G[: self.n + 1, self.n + 1]
        scale = max(float(np.abs(phi).max()), float(np.abs(np.diag(Phi)).max()))
        return float(np.abs(Phi @ self.coefficients - phi).max() / scale)


def one_step_from_moments(d, sys: PolynomialSystem, n: int) -> Predictor:
    """Predictor of order ``n`` from the moments ``d(0) .. d(2n + 2)``.

    Raises :class:`MeasureDegenerate` when ``mu`` is supported on at most
    ``n`` points (the predictor is then not unique).  With exactly
    ``n + 1`` support points the prediction is exact and ``delta_n = 0``.
    """
    d = np.asarray(d, dtype=float)
    if d.shape[0] < 2 * n + 3:
        raise IndexOutOfRange(f"order-{n} prediction needs moments 0..{2 * n + 2}")
    chain = modified_chebyshev(d[: 2 * n + 3], sys, n + 1, null_final=True)
    conn = connection_from_measure(chain, sys, n + 1)
    # sigma_{n+1}(pi) c(n+1, k) = values[n+1, k] since c(n+1, n+1) = 1 / sigma_{n+1}(pi)
    b = -conn.values[n + 1, : n + 1].copy()
    log_err = chain.log_sigma_pi[n + 1] + 0.5 * chain.log_norm_sq(n + 1)
    return Predictor(n, b, float(log_err), chain)


def one_step(mu: SpectralMeasure, sys: PolynomialSystem, n: int) -> Predictor:
    """Best linear predictor of ``X_{n+1}`` from ``X_0 .. X_n``."""
    return one_step_from_moments(moments(mu, sys, 2 * n + 2), sys, n)


def log_error_curve_from_moments(d, sys: PolynomialSystem, n_max: int) -> np.ndarray:
    """``ln delta_n`` for ``n = 0 .. n_max`` from a single recursion.

    When ``mu`` has only ``k`` support points, ``delta_n = 0`` (``-inf``)
    for ``n >= k - 1``.
    """
    d = np.asarray(d, dtype=float)
    if d.shape[0] < 2 * n_max + 3:
        raise IndexOutOfRange(f"error curve to {n_max} needs moments 0..{2 * n_max + 2}")
    depth = n_max + 1
    try:
        chain = modified_chebyshev(d[: 2 * depth + 1], sys, depth, null_final=True)
        complete = depth
    except MeasureDegenerate as exc:
        complete = exc.depth - 1
        chain = modified_chebyshev(d[: 2 * complete + 1], sys, complete)
    out = np.full(n_max + 1, -math.inf)
    k = np.arange(1, complete + 1)
    out[: complete] = chain.log_sigma_pi[k] + 0.5 * (chain.log_sigma_diag[k] - chain.log_sigma_pi[k])
    return out


def error_curve(mu: SpectralMeasure, sys: PolynomialSystem, n_max: int) -> np.ndarray:
    """``delta_n`` for ``n = 0 .. n_max``."""
    return np.exp(log_error_curve_from_moments(moments(mu, sys, 2 * n_max + 2), sys, n_max))


def m_step_error_from_moments(d, sys: PolynomialSystem, n: int, m: int) -> float:
    """Error of predicting ``X_{n+m}`` from ``X_0 .. X_n``.

    ``delta_n^(m) = sqrt(sum_{k=n+1}^{n+m} c_{Pq}(n+m, k)^2)`` where
    ``P_{n+m} = sum_k c_{Pq}(n+m, k) q_k`` in the orthonormal polynomials
    of ``mu``.  Returns 0 when ``mu`` has at most ``n + 1`` support points.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    top = n + m
    d = np.asarray(d, dtype=float)
    if d.shape[0] < 2 * top + 1:
        raise IndexOutOfRange(f"{m}-step error needs moments 0..{2 * top}")
    try:
        chain = modified_chebyshev(d[: 2 * top + 1], sys, top, null_final=True)
    except MeasureDegenerate as exc:
        if exc.depth <= n + 1:
            return 0.0
        raise
    limit = top if chain.log_sigma_diag[top] > -math.inf else top - 1
    c = connection_to_orthonormal(chain, top, limit)
    return float(math.sqrt(np.sum(c[n + 1 :] ** 2)))


def m_step_error(mu: SpectralMeasure, sys: PolynomialSystem, n: int, m: int) -> float:
    return m_step_error_from_moments(moments(mu, sys, 2 * (n + m)), sys, n, m)


def gram_error(d, sys: PolynomialSystem, n: int) -> float:
    """``delta_n = sqrt(det G_{n+1} / det G_n)`` with ``G_k = [(eps_i * eps_j)(d)]_{i,j<=k}``.

    The Gram matrices are rescaled by ``sqrt(h(i) h(j))`` before taking
    determinants, which keeps them close to unit diagonal.
    """
    d = np.asarray(d, dtype=float)
    if d.shape[0] < 2 * n + 3:
        raise IndexOutOfRange(f"Gram error of order {n} needs moments 0..{2 * n + 2}")
    G = translation_matrix(sys, d, n + 1)
    s = np.exp(0.5 * log_haar_weights(sys, n + 1))
    Gs = G * s[:, None] * s[None, :]
    sign1, log1 = np.linalg.slogdet(Gs)
    sign0, log0 = np.linalg.slogdet(Gs[: n + 1, : n + 1])
    if sign0 <= 0:
        raise MeasureDegenerate(f"Gram matrix of order {n} is not positive definite", depth=n)
    if sign1 <= 0:
        return 0.0
    log_ratio = log1 - log0 - 2.0 * math.log(s[n + 1])
    return math.exp(0.5 * log_ratio)


def gram_diagonal(d, sys: PolynomialSystem, n: int) -> float:
    """``Delta(X_n) = E|X_n|^2 = sum_k g(n, n, k) d(k)``, an upper bound for ``delta_{n-1}^2``."""
    d = np.asarray(d)
    return float(linearize(sys, n, n) @ d[: 2 * n + 1])


# ----------------------------------------------------------------------
# Turan determinants
# ----------------------------------------------------------------------
def turan(sys: PolynomialSystem, n: int, x, form: int = 29) -> np.ndarray:
    """``theta_n(x) = h(n) (P_n^2 - (a_n / a_{n-1}) P_{n-1} P_{n+1})``.

    ``form=30`` and ``form=31`` use the rewritings in terms of
    ``(P_{n-1}, P_n)`` and ``(P_n, P_{n+1})``; they hold for even systems
    only.
    """
    if n < 1:
        raise ValueError("theta_n needs n >= 1")
    x = np.asarray(x, dtype=float)
    a, b, c = sys.coefficients(n + 1)
    lh = log_haar_weights(sys, n + 1)
    h = np.exp(lh)
    P = sys.evaluate_all(n + 1, x)
    pm, p, pp = P[n - 1], P[n], P[n + 1]
    if form == 29:
        return h[n] * (p * p - (a[n] / a[n - 1]) * pm * pp)
    if not sys.even:
        raise ValueError("the alternate Turan forms need an even system")
    if form == 30:
        return h[n] * p * p + h[n - 1] * pm * pm - x / a[n - 1] * h[n] * pm * p
    if form == 31:
        return (
            h[n] * p * p
            + h[n + 1] * a[n] * c[n + 1] / (a[n - 1] * c[n]) * pp * pp
            - h[n] * a[n] * x / (a[n - 1] * c[n]) * p * pp
        )
    raise ValueError(f"unknown Turan form {form}")


# ----------------------------------------------------------------------
# determinism report
# ----------------------------------------------------------------------
@dataclass
class DeterminismReport:
    """Evidence on whether ``delta_n -> 0``.

    ``criterion`` names the sufficient condition that applies:
    ``ks_haar_unbounded`` (``pi`` has the Kolmogorov-Szego property and
    ``h`` is unbounded), ``ks_bounded_haar`` (``pi`` has it, ``h`` is
    bounded, and the verdict follows the property of ``mu``),
    ``even_limit_above_half`` (even system, ``a_n -> a`` in ``(1/2, 1)``),
    ``turan_summable`` (even system, ``a_n -> 1/2``, ``h`` unbounded and
    ``|a_n c_{n+1} - a_{n-1} c_n|`` summable), ``vanishing_moments``
    (``h`` unbounded and ``d(n) -> 0``) or ``inconclusive``.
    """

    family: str
    n_window: int
    haar_class: str
    haar_exponent: float
    haar_log_slope: float
    ks_pi: float
    ks_pi_diverged: bool
    ks_mu: float
    ks_mu_diverged: bool
    a_limit: float
    a_drift: float
    turan_partial_sum: float
    turan_tail: float
    moment_tail: float
    deterministic: bool | None
    criterion: str
    rate_exponent: float | None = None
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        for k, v in out.items():
            if isinstance(v, float) and not math.isfinite(v):
                out[k] = str(v)
        return out


def _fit_slope(xs, ys) -> float:
    return float(np.polyfit(np.asarray(xs, dtype=float), np.asarray(ys, dtype=float), 1)[0])


def classify_determinism(sys: PolynomialSystem, mu: SpectralMeasure, n_max: int = 256) -> DeterminismReport:
    """Check the sufficient conditions for asymptotic determinism on ``n <= n_max``.

    Limits are estimated on the window ``[n_max / 4, n_max]``; the report
    carries the raw numbers so callers can judge the margins.
    """
    if n_max < 16:
        raise ValueError("n_max must be at least 16")
    notes: list[str] = []
    lo = n_max // 4
    ns = np.arange(lo, n_max + 1)
    lh = log_haar_weights(sys, n_max)
    haar_exp = _fit_slope(np.log(ns), lh[ns])
    haar_slope = _fit_slope(ns, lh[ns])
    if haar_slope > 1e-2 and haar_exp > 2.0:
        haar_class = "exponential"
    elif haar_exp > 0.05:
        haar_class = "polynomial"
    else:
        haar_class = "bounded"
    unbounded = haar_class != "bounded"

    in_unit = sys.support[0] >= -1.0 - 1e-12 and sys.support[1] <= 1.0 + 1e-12
    ks_pi, ks_pi_div = (-math.inf, True)
    ks_mu, ks_mu_div = (-math.inf, True)
    if in_unit:
        if sys.has_pi_density:
            ks_pi, ks_pi_div = kolmogorov_szego_integral(SpectralMeasure(density_vs_pi=np.ones_like), sys)
        ks_mu, ks_mu_div = kolmogorov_szego_integral(mu, sys)
    else:
        notes.append("support not inside [-1, 1]; Kolmogorov-Szego tests skipped")

    a, _, c = sys.coefficients(n_max + 1)
    a_limit = float(a[n_max])
    a_drift = float(abs(a[n_max] - a[n_max // 2]))
    diffs = np.abs(a[1 : n_max + 1] * c[2 : n_max + 2] - a[: n_max] * c[1 : n_max + 1])
    turan_sum = float(diffs.sum())
    turan_tail = float(diffs[n_max // 2 :].sum())

    d = moments(mu, sys, n_max)
    moment_tail = float(np.abs(d[n_max // 2 :]).max() / max(abs(d[0]), 1e-300))

    deterministic: bool | None = None
    criterion = "inconclusive"
    rate = None
    if in_unit and not ks_pi_div and unbounded:
        deterministic, criterion = True, "ks_haar_unbounded"
        rate = -0.5 * haar_exp if haar_class == "polynomial" else None
    elif in_unit and not ks_pi_div and not unbounded:
        deterministic, criterion = bool(ks_mu_div), "ks_bounded_haar"
    elif sys.even and 0.5 + 1e-3 < a_limit < 1.0 and a_drift < 1e-6:
        deterministic, criterion = True, "even_limit_above_half"
    elif sys.even and unbounded and abs(a_limit - 0.5) < 1e-2 and turan_tail < 1e-2 * max(turan_sum, 1e-300) + 1e-6:
        deterministic, criterion = True, "turan_summable"
    elif unbounded and moment_tail < 1e-3:
        deterministic, criterion = True, "vanishing_moments"
    return DeterminismReport(
        family=sys.family,
        n_window=n_max,
        haar_class=haar_class,
        haar_exponent=haar_exp,
        haar_log_slope=haar_slope,
        ks_pi=ks_pi,
        ks_pi_diverged=ks_pi_div,
        ks_mu=ks_mu,
        ks_mu_diverged=ks_mu_div,
        a_limit=a_limit,
        a_drift=a_drift,
        turan_partial_sum=turan_sum,
        turan_tail=turan_tail,
        moment_tail=moment_tail,
        deterministic=deterministic,
        criterion=criterion,
        rate_exponent=rate,
        notes=notes,
    )


# ----------------------------------------------------------------------
# moving averages with observed initial innovations
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class MAPrediction:
    """Predictor of ``X_{N+1}`` from ``X_0 .. X_N`` and ``Z_0 .. Z_{q-1}``.

    ``value = x_coefficients @ X + z_coefficients @ Z``.
    """

    value: complex | float
    error: float
    x_coefficients: np.ndarray
    z_coefficients: np.ndarray


def ma_weights(sys: PolynomialSystem, coefficients, n_max: int) -> np.ndarray:
    """``W[n, s] = sum_k a_k g(n, k, s)`` so that ``X_n = sum_s W[n, s] Z_s``.

    The coefficients are the effective ones (any Haar factor already
    absorbed).
    """
    a = np.asarray(coefficients, dtype=float)
    q = a.size - 1
    W = np.zeros((n_max + 1, n_max + q + 1))
    for n in range(n_max + 1):
        for k in range(q + 1):
            if a[k] != 0.0:
                W[n, abs(n - k) : n + k + 1] += a[k] * linearize(sys, n, k)
    return W


def ma_predict_with_info(sys: PolynomialSystem, coefficients, x, z_init) -> MAPrediction:
    """Project ``X_{N+1}`` on ``X_0 .. X_N, Z_0 .. Z_{q-1}`` for an MA(q) sequence.

    ``X_n = sum_k a_k T_n Z_k`` with white noise ``E|Z_s|^2 = 1 / h(s)`` and
    ``a_q = 1``.  The innovations ``Z_q .. Z_{q+N+1}`` are peeled off one
    at a time by a triangular recursion; the projection drops
    ``Z_{q+N+1}``, which is orthogonal to everything observed, leaving the
    error ``g(N+1, q, N+q+1) / sqrt(h(N+q+1))``.
    """
    a = np.asarray(coefficients, dtype=float)
    q = a.size - 1
    if q < 1 or a[q] != 1.0:
        raise ParameterOutOfRange("prediction with side information needs q >= 1 and a_q = 1")
    x = np.asarray(x)
    z_init = np.asarray(z_init)
    if z_init.shape[0] != q:
        raise IndexOutOfRange(f"need exactly {q} initial innovations, got {z_init.shape[0]}")
    N = x.shape[0] - 1
    if N < 0:
        raise IndexOutOfRange("need at least one observation")
    W = ma_weights(sys, a, N + 1)
    # Linear forms over the observables (X_0 .. X_{N+1}, Z_0 .. Z_{q-1}).
    nx = N + 2
    dim = nx + q
    Z = np.zeros((N + 2, dim))  # Z[j] represents Z_{q+j}
    for n in range(N + 2):
        form = np.zeros(dim)
        form[n] = 1.0
        form[nx:] -= W[n, :q]
        for j in range(n):
            form -= W[n, q + j] * Z[j]
        Z[n] = form / W[n, q + n]
    lead = W[N + 1, q + N + 1]  # g(N+1, q, N+q+1)
    # X_{N+1} = lead * (Z_{q+N+1} - (form without X_{N+1}))
    rest = Z[N + 1].copy()
    rest[N + 1] = 0.0
    coef = -lead * rest
    xc, zc = coef[: N + 1], coef[nx:]
    value = xc @ x + zc @ z_init
    lh = log_haar_weights(sys, N + q + 1)
    error = float(lead * math.exp(-0.5 * lh[N + q + 1]))
    return MAPrediction(value, error, xc, zc)
