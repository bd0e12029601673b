import math

import numpy as np
import pytest
from scipy.special import eval_chebyu

from hyperseq import (
    IndexOutOfRange,
    MeasureDegenerate,
    ParameterOutOfRange,
    cartier_dunau,
    chebyshev_first,
    chebyshev_second,
    jacobi,
)
from hyperseq.hyperconv import haar_weights, linearize, log_haar_weights, translation_matrix
from hyperseq.measures import SpectralMeasure, moments, orthogonalization_measure, point_mass
from hyperseq.predict import (
    classify_determinism,
    error_curve,
    gram_diagonal,
    gram_error,
    log_error_curve_from_moments,
    m_step_error,
    m_step_error_from_moments,
    ma_predict_with_info,
    ma_weights,
    one_step,
    one_step_from_moments,
    turan,
)

from conftest import BUILTINS


def _shapes(sys):
    lo, hi = sys.pi_support
    mid = 0.5 * (lo + hi)
    return {
        "pi": orthogonalization_measure(),
        "poly": SpectralMeasure(density_vs_pi=lambda x: 1.2 + 0.5 * x - 0.3 * x**2),
        "mixed": SpectralMeasure(atoms=((mid + 0.3 * (hi - lo), 0.2), (lo, 0.1)), density_vs_pi=lambda x: 1 + 0 * x),
    }


def _projection_error(G, n):
    """Dense oracle: residual norm of projecting entry n+1 on entries 0..n of a Gram matrix."""
    Phi, phi = G[: n + 1, : n + 1], G[: n + 1, n + 1]
    b = np.linalg.solve(Phi, phi)
    return b, math.sqrt(max(G[n + 1, n + 1] - phi @ b, 0.0))


# ---------------------------------------------------------------- closed forms
def test_chebyshev_pi_constant_error():
    sys = chebyshev_first()
    delta = error_curve(orthogonalization_measure(), sys, 64)
    np.testing.assert_allclose(delta, 1 / math.sqrt(2), atol=1e-10)
    d = moments(orthogonalization_measure(), sys, 12)
    assert gram_error(d, sys, 5) == pytest.approx(1 / math.sqrt(2), abs=1e-12)


@pytest.mark.parametrize("name", sorted(BUILTINS))
def test_pi_error_is_inverse_root_haar(name):
    sys = BUILTINS[name]()
    delta = error_curve(orthogonalization_measure(), sys, 40)
    np.testing.assert_allclose(np.log(delta), -0.5 * log_haar_weights(sys, 41)[1:], atol=1e-9)


def test_jacobi_half_pi_rate():
    sys = jacobi(0.5, 0.5)
    ns = np.arange(16, 129)
    delta = error_curve(orthogonalization_measure(), sys, 128)[ns]
    slope = np.polyfit(np.log(ns), np.log(delta), 1)[0]
    assert slope == pytest.approx(-1.0, abs=0.1)


def test_exact_prediction_with_n_plus_one_atoms():
    sys = chebyshev_first()
    mu = SpectralMeasure(atoms=((-0.5, 0.3), (0.1, 0.4), (0.8, 0.3)))
    p = one_step(mu, sys, 2)
    assert p.error == 0.0 and p.log_error == -math.inf
    curve = error_curve(mu, sys, 6)
    assert np.all(curve[2:] == 0) and np.all(curve[:2] > 0)
    with pytest.raises(MeasureDegenerate):
        one_step(mu, sys, 3)


def test_gram_error_two_by_two():
    sys = jacobi(1.5, 0.5)
    mu = SpectralMeasure(atoms=((0.3, 0.5),), density_vs_pi=lambda x: 1 + x**2)
    d = moments(mu, sys, 2)
    K00, K10, K11 = d[0], d[1], linearize(sys, 1, 1) @ d[:3]
    assert gram_error(d, sys, 0) == pytest.approx(math.sqrt(K11 - K10**2 / K00), rel=1e-12)
    assert gram_diagonal(d, sys, 1) == pytest.approx(K11, rel=1e-14)


def test_gram_error_bounds(builtin):
    mu = _shapes(builtin)["mixed"]
    d = moments(mu, builtin, 40)
    for n in range(0, 19):
        assert gram_error(d, builtin, n) ** 2 <= gram_diagonal(d, builtin, n + 1) * (1 + 1e-12)


def test_input_length_checks():
    sys = chebyshev_first()
    with pytest.raises(IndexOutOfRange):
        one_step_from_moments(np.ones(4), sys, 1)
    with pytest.raises(IndexOutOfRange):
        gram_error(np.ones(4), sys, 1)
    with pytest.raises(IndexOutOfRange):
        log_error_curve_from_moments(np.ones(4), sys, 1)
    with pytest.raises(IndexOutOfRange):
        m_step_error_from_moments(np.ones(4), sys, 1, 1)
    with pytest.raises(ValueError):
        m_step_error_from_moments(np.ones(9), sys, 1, 0)


# ---------------------------------------------------------------- spectral vs Gram vs dense
@pytest.mark.parametrize("shape", ["pi", "poly", "mixed"])
def test_spectral_route_matches_gram(builtin, shape):
    mu = _shapes(builtin)[shape]
    d = moments(mu, builtin, 50)
    spectral = np.exp(log_error_curve_from_moments(d, builtin, 24))
    for n in range(25):
        assert abs(spectral[n] - gram_error(d, builtin, n)) <= 1e-8 * spectral[n]


@pytest.mark.parametrize("shape", ["pi", "poly", "mixed"])
def test_predictor_normal_equations(builtin, shape):
    mu = _shapes(builtin)[shape]
    d = moments(mu, builtin, 30)
    for n in (0, 3, 9, 14):
        p = one_step_from_moments(d, builtin, n)
        assert p.normal_equation_residual(d) <= 1e-8
        G = translation_matrix(builtin, d, n + 1)
        b, err = _projection_error(G, n)
        scale = max(np.abs(b).max(), 1.0)
        np.testing.assert_allclose(p.coefficients, b, rtol=0, atol=1e-8 * scale)
        assert p.error == pytest.approx(err, rel=1e-7)
        phi = G[: n + 1, n + 1]
        assert p.error**2 == pytest.approx(G[n + 1, n + 1] - phi @ p.coefficients, abs=1e-8 * G[n + 1, n + 1])


def test_predictor_is_minimal(rng):
    sys = jacobi(0.5, 0.5)
    mu = SpectralMeasure(atoms=((0.4, 0.3),), density_vs_pi=lambda x: 1 + 0.5 * x)
    n = 6
    d = moments(mu, sys, 2 * n + 2)
    G = translation_matrix(sys, d, n + 1)
    p = one_step_from_moments(d, sys, n)

    def objective(b):
        return G[n + 1, n + 1] - 2 * b @ G[: n + 1, n + 1] + b @ G[: n + 1, : n + 1] @ b

    best = objective(p.coefficients)
    assert best == pytest.approx(p.error**2, rel=1e-8)
    for _ in range(20):
        eps = rng.standard_normal(n + 1) * 10.0 ** rng.uniform(-4, 0)
        assert objective(p.coefficients + eps) > best


def test_predict_applies_coefficients():
    sys = chebyshev_first()
    atoms = np.array([0.37, -0.2])
    p = one_step(point_mass(atoms[0], 1.0) + point_mass(atoms[1], 0.5), sys, 1)
    assert p.error == 0.0
    # with two frequencies every path in their span is predicted exactly
    path = sys.evaluate_all(2, atoms) @ np.array([1.3, -0.7])
    assert p.predict(path) == pytest.approx(path[2], abs=1e-12)
    with pytest.raises(IndexOutOfRange):
        p.predict(path[:1])


# ---------------------------------------------------------------- m-step
def test_m_step_one_is_one_step(builtin):
    mu = _shapes(builtin)["poly"]
    for n in (0, 4, 10):
        assert m_step_error(mu, builtin, n, 1) == pytest.approx(one_step(mu, builtin, n).error, abs=1e-10)


def test_m_step_chebyshev_pi():
    sys = chebyshev_first()
    for n in (1, 5, 20):
        assert m_step_error(orthogonalization_measure(), sys, n, 2) == pytest.approx(1 / math.sqrt(2), abs=1e-10)


def test_m_step_dense_oracle():
    sys = cartier_dunau(3.0)
    mu = SpectralMeasure(atoms=((0.2, 0.5),), density_vs_pi=lambda x: 1 + x**2)
    n, m = 4, 3
    d = moments(mu, sys, 2 * (n + m))
    G = translation_matrix(sys, d, n + m)
    Phi, phi = G[: n + 1, : n + 1], G[: n + 1, n + m]
    b = np.linalg.solve(Phi, phi)
    expected = math.sqrt(G[n + m, n + m] - phi @ b)
    assert m_step_error(mu, sys, n, m) == pytest.approx(expected, rel=1e-8)


def test_m_step_two_atoms():
    sys = chebyshev_first()
    mu = SpectralMeasure(atoms=((-0.3, 0.6), (0.5, 0.4)))
    d = moments(mu, sys, 2)
    K11 = 0.5 * (d[0] + d[2])
    assert m_step_error(mu, sys, 0, 1) == pytest.approx(math.sqrt(K11 - d[1] ** 2 / d[0]), rel=1e-10)
    assert m_step_error(mu, sys, 1, 2) == 0.0


# ---------------------------------------------------------------- determinism scenarios
def test_endpoint_atoms_scenario():
    sys = jacobi(0.5, 0.5)
    alpha, beta = 0.3, 0.2
    atoms = SpectralMeasure(atoms=((1.0, alpha), (-1.0, beta)))
    G = translation_matrix(sys, moments(atoms, sys, 2), 1)
    assert np.linalg.det(G) == pytest.approx(4 * alpha * beta, abs=1e-14)
    mu = atoms + SpectralMeasure(density_vs_pi=lambda x: 1 + 0.5 * x)
    d = moments(mu, sys, 2 * 48 + 2)
    errors = np.array([gram_error(d, sys, n) for n in range(8, 49)])
    assert np.all(np.diff(errors) < 0)
    assert errors[-1] < 0.25 * errors[0]


def test_tree_characters_decay():
    sys = cartier_dunau(2.0)
    xs = np.array([-0.9, -0.5, 0.1, 0.5, 0.9])
    P = np.abs(sys.evaluate_all(200, xs))
    window_max = np.array([P[k : k + 20].max(axis=0) for k in range(0, 181, 20)])
    assert np.all(np.diff(window_max, axis=0) < 0)
    assert np.all(P[200] < 1e-3)


def test_tree_errors_decrease():
    sys = cartier_dunau(2.0)
    mu = point_mass(0.5) + orthogonalization_measure(0.5)
    d = moments(mu, sys, 98)
    errors = np.array([gram_error(d, sys, n) for n in range(8, 49)])
    assert np.all(np.diff(errors) < 0)
    assert errors[-1] < 0.1 * errors[0]


# ---------------------------------------------------------------- Turan determinants
def test_turan_chebyshev_at_one():
    sys = chebyshev_first()
    for n in range(2, 12):
        assert turan(sys, n, 1.0) == pytest.approx(0.0, abs=1e-14)
    with pytest.raises(ValueError):
        turan(sys, 0, 0.5)


@pytest.mark.parametrize("name", ["chebyshev1", "chebyshev2", "jacobi_half", "cartier_dunau_2"])
def test_turan_forms_agree(name):
    sys = BUILTINS[name]()
    x = np.linspace(*sys.support, 13)
    for n in (1, 2, 7, 30):
        # the forms cancel terms of size h(n) P^2, so agreement is relative to that size
        P = sys.evaluate_all(n + 1, x)[n - 1 :]
        scale = haar_weights(sys, n + 1)[n - 1 :].max() * np.max(P**2, axis=0)
        t29 = turan(sys, n, x, form=29)
        assert np.all(np.abs(turan(sys, n, x, form=30) - t29) <= 1e-10 * scale)
        assert np.all(np.abs(turan(sys, n, x, form=31) - t29) <= 1e-10 * scale)


def test_turan_forms_need_even_system():
    with pytest.raises(ValueError):
        turan(jacobi(0.5, -0.5), 3, 0.2, form=30)
    with pytest.raises(ValueError):
        turan(chebyshev_first(), 3, 0.2, form=28)


def test_turan_converges_in_interior():
    sys = jacobi(0.5, 0.5)
    x = np.array([-0.7, 0.3])
    N = 100
    theta = np.array([turan(sys, n, x) for n in range(N, 2 * N + 1)])
    assert np.abs(theta - theta[-1]).max() < 1e-6


# ---------------------------------------------------------------- classification
def test_classify_jacobi_half():
    r = classify_determinism(jacobi(0.5, 0.5), orthogonalization_measure())
    assert r.deterministic is True and r.criterion == "ks_haar_unbounded"
    assert r.rate_exponent == pytest.approx(-1.0, abs=0.1)
    assert r.haar_class == "polynomial"


def test_classify_chebyshev():
    r = classify_determinism(chebyshev_first(), orthogonalization_measure())
    assert r.deterministic is False and r.criterion == "ks_bounded_haar"
    assert r.haar_class == "bounded"
    r = classify_determinism(chebyshev_first(), point_mass(0.3))
    assert r.deterministic is True and r.ks_mu_diverged


def test_classify_tree():
    for mu in (orthogonalization_measure(), point_mass(0.5)):
        r = classify_determinism(cartier_dunau(2.0), mu)
        assert r.deterministic is True and r.criterion == "even_limit_above_half"
        assert r.a_limit == pytest.approx(2 / 3, abs=1e-12)
        assert r.haar_class == "exponential"


def test_classify_report_serializes():
    import json

    r = classify_determinism(chebyshev_second(), point_mass(0.1), n_max=64)
    text = json.dumps(r.to_dict())
    assert json.loads(text)["family"] == r.family
    with pytest.raises(ValueError):
        classify_determinism(chebyshev_second(), point_mass(0.1), n_max=8)


# ---------------------------------------------------------------- MA prediction with initial innovations
def _dense_ma_oracle(sys, a, N):
    """Project X_{N+1} on (X_0..X_N, Z_0..Z_{q-1}) via the joint covariance."""
    q = len(a) - 1
    W = ma_weights(sys, a, N + 1)
    S = W.shape[1]
    var = 1.0 / haar_weights(sys, S - 1)
    F = np.vstack([W, np.eye(S)[:q]])  # rows: X_0..X_{N+1}, Z_0..Z_{q-1}
    C = (F * var) @ F.T
    obs = list(range(N + 1)) + list(range(N + 2, N + 2 + q))
    coef = np.linalg.solve(C[np.ix_(obs, obs)], C[obs, N + 1])
    err = math.sqrt(C[N + 1, N + 1] - C[N + 1, obs] @ coef)
    return coef[: N + 1], coef[N + 1 :], err


def test_ma1_chebyshev_closed_form():
    sys = chebyshev_first()
    a, N = 0.4, 12
    r = ma_predict_with_info(sys, [a, 1.0], np.zeros(N + 1), np.zeros(1))
    U = lambda n: eval_chebyu(n, -a)  # noqa: E731
    xc = np.array([-U(N + 1 - t) for t in range(N + 1)])
    xc[0] += 0.5 * U(N + 1)
    np.testing.assert_allclose(r.x_coefficients, xc, atol=1e-9)
    assert r.z_coefficients[0] == pytest.approx(0.5 * (a * U(N + 1) + U(N)), abs=1e-9)
    assert r.error == pytest.approx(0.5 / math.sqrt(2), abs=1e-12)


@pytest.mark.parametrize(
    "make,a",
    [
        (chebyshev_first, [0.4, 1.0]),
        (chebyshev_first, [0.3, -0.2, 1.0]),
        (lambda: jacobi(0.5, 0.5), [0.7, 1.0]),
        (lambda: cartier_dunau(2.0), [0.2, 0.5, 1.0]),
    ],
)
def test_ma_prediction_matches_dense_projection(make, a):
    sys = make()
    N = 10
    r = ma_predict_with_info(sys, a, np.zeros(N + 1), np.zeros(len(a) - 1))
    xc, zc, err = _dense_ma_oracle(sys, a, N)
    scale = max(np.abs(xc).max(), np.abs(zc).max())
    np.testing.assert_allclose(r.x_coefficients, xc, atol=1e-8 * scale)
    np.testing.assert_allclose(r.z_coefficients, zc, atol=1e-8 * scale)
    assert r.error == pytest.approx(err, rel=1e-8)
    q = len(a) - 1
    g = linearize(sys, N + 1, q)[-1]
    assert r.error == pytest.approx(g * math.exp(-0.5 * log_haar_weights(sys, N + q + 1)[-1]), rel=1e-12)


def test_ma_prediction_value_on_a_path():
    sys = chebyshev_first()
    a = [0.4, 1.0]
    rng = np.random.default_rng(1)
    Z = rng.standard_normal(16) / np.sqrt(haar_weights(sys, 15))
    W = ma_weights(sys, a, 13)
    X = W @ Z[: W.shape[1]]
    r = ma_predict_with_info(sys, a, X[:13], Z[:1])
    # the only unobserved innovation is Z_{14}
    assert X[13] - r.value == pytest.approx(W[13, 14] * Z[14], abs=1e-9)


def test_ma_prediction_preconditions():
    sys = chebyshev_first()
    with pytest.raises(ParameterOutOfRange):
        ma_predict_with_info(sys, [1.0], np.zeros(4), np.zeros(0))
    with pytest.raises(ParameterOutOfRange):
        ma_predict_with_info(sys, [0.3, 0.5], np.zeros(4), np.zeros(1))
    with pytest.raises(IndexOutOfRange):
        ma_predict_with_info(sys, [0.3, 1.0], np.zeros(4), np.zeros(2))
