import math

import numpy as np
import pytest
from scipy.special import logsumexp
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from gsobs.errors import DomainError, PaddingError
from gsobs.hermite import (HermiteExpansion, apply_derivative, apply_position, bernstein_bound,
                           bernstein_check, bernstein_operator_norm, gauss_hermite_rule,
                           gs_pair_seminorm, gs_theta_norm, hermite_eval, hermite_functions,
                           index_of, ladder_matrices, multi_indices, n_coefficients, project,
                           weighted_seminorm)
from gsobs.sequences import WeightModel


# -- basis evaluation -------------------------------------------------------

def test_hermite_values():
    assert hermite_eval(0, 0.0) == pytest.approx(math.pi ** -0.25, rel=1e-15)
    assert hermite_eval(1, 0.0) == 0.0
    assert hermite_eval(1, 1.0) == pytest.approx(math.sqrt(2) * math.pi ** -0.25 * math.exp(-0.5), rel=1e-14)


def test_hermite_functions_match_numpy_polynomials():
    x = np.linspace(-6, 6, 101)
    table = hermite_functions(20, x)
    for k in range(21):
        assert np.max(np.abs(table[k] - oracles.phi(k, x))) < 1e-12


def test_hermite_large_index_stable():
    v = hermite_functions(10_000, np.array([0.0, 50.0, 200.0]))
    assert np.all(np.isfinite(v))
    # |phi_k| <= pi^{-1/4}
    assert np.max(np.abs(v)) <= math.pi ** -0.25 + 1e-12


# -- Gauss-Hermite ------------------------------------------------------------

def test_gauss_hermite_small_rules():
    x, w = gauss_hermite_rule(1)
    assert x[0] == 0.0 and w[0] == pytest.approx(math.sqrt(math.pi), rel=1e-15)
    x, w = gauss_hermite_rule(2)
    assert np.allclose(np.sort(x), [-1 / math.sqrt(2), 1 / math.sqrt(2)], rtol=0, atol=1e-15)
    assert np.allclose(w, math.sqrt(math.pi) / 2, rtol=1e-15)
    assert abs(np.sum(w * x ** 3)) < 1e-15


@pytest.mark.parametrize("n", [5, 20, 64, 150])
def test_gauss_hermite_moments(n):
    x, w = gauss_hermite_rule(n)
    for k in range(0, 2 * n, 2):
        # int x^k e^{-x^2} = Gamma((k+1)/2); compare scaled moments to avoid overflow
        ref = math.lgamma((k + 1) / 2)
        nz = x != 0
        if k == 0:
            lognum = logsumexp(np.log(w))
        else:
            lognum = logsumexp(np.log(w[nz]) + k * np.log(np.abs(x[nz])))
        assert abs(math.expm1(lognum - ref)) < 1e-13 * max(1, k)


def test_gauss_hermite_matches_numpy():
    x, w = gauss_hermite_rule(40)
    xr, wr = np.polynomial.hermite.hermgauss(40)
    assert np.allclose(np.sort(x), xr, atol=1e-13)
    assert np.allclose(w[np.argsort(x)], wr, rtol=1e-11)


def test_gauss_hermite_range():
    for n in (0, 513):
        with pytest.raises(DomainError):
            gauss_hermite_rule(n)


def test_gram_identity():
    x, w = gauss_hermite_rule(64, scaled=True)
    P = hermite_functions(20, x)
    G = (P * w) @ P.T
    assert np.max(np.abs(G - np.eye(21))) < 1e-10
    assert np.max(np.abs(oracles.gram_1d(21) - np.eye(21))) < 1e-10


# -- multi-indices ----------------------------------------------------------

def test_multi_index_enumeration():
    for d in (1, 2, 3):
        for N in (0, 3, 7):
            idx = multi_indices(d, N)
            assert len(idx) == n_coefficients(d, N) == math.comb(N + d, d)
            degs = idx.sum(axis=1)
            assert np.all(np.diff(degs) >= 0)
            for i, a in enumerate(idx):
                assert index_of(tuple(a)) == i
    assert [tuple(a) for a in multi_indices(2, 1)] == [(0, 0), (0, 1), (1, 0)]


# -- ladder algebra ---------------------------------------------------------

def test_ladder_identities():
    c = np.zeros(4)
    c[0] = 1.0
    assert np.allclose(apply_position(c, 0), [0, 1 / math.sqrt(2), 0, 0])
    assert np.allclose(apply_derivative(c, 0), [0, -1 / math.sqrt(2), 0, 0])


@pytest.mark.parametrize("d", [1, 2, 3])
def test_eigenrelation(d):
    N = 20 if d < 3 else 8
    for alpha in multi_indices(d, N):
        f = HermiteExpansion.basis(d, N, alpha)
        t = f.to_tensor(2)
        h = np.zeros_like(t)
        for ax in range(d):
            h += apply_position(apply_position(t, ax), ax) - apply_derivative(apply_derivative(t, ax), ax)
        g = HermiteExpansion.from_tensor(h, N)
        assert np.array_equal(g.coeffs, (2 * alpha.sum() + d) * f.coeffs) or \
            np.max(np.abs(g.coeffs - (2 * alpha.sum() + d) * f.coeffs)) < 1e-12


def test_padding_error():
    L = ladder_matrices(5, 1)
    with pytest.raises(PaddingError):
        L.check_order(2)
    f = HermiteExpansion.basis(1, 3, (3,))
    with pytest.raises(PaddingError):
        weighted_seminorm(f, (2,), (1,), margin=2)


def test_band_dump_rows():
    text = ladder_matrices(3, 2).dump_bands_csv()
    assert text.splitlines()[0].split(",")[0] == "matrix"
    assert len(text.splitlines()) > 5


# -- weighted seminorms -----------------------------------------------------

def test_seminorm_examples():
    f = HermiteExpansion.basis(1, 0, (0,))
    assert weighted_seminorm(f, (0,), (0,)) == pytest.approx(1.0)
    assert weighted_seminorm(f, (1,), (0,)) == pytest.approx(1 / math.sqrt(2), rel=1e-15)
    assert weighted_seminorm(f, (0,), (1,)) == pytest.approx(1 / math.sqrt(2), rel=1e-15)


@pytest.mark.parametrize("N", [0, 3, 7, 12])
def test_seminorm_vs_polynomial_quadrature_1d(N):
    rng = np.random.default_rng(N)
    f = HermiteExpansion.random(1, N, rng)
    for a in range(4):
        for b in range(4 - a):
            ref = oracles.seminorm_1d(f.coeffs, a, b)
            assert weighted_seminorm(f, (a,), (b,)) == pytest.approx(ref, rel=1e-8)


@pytest.mark.parametrize("N", [2, 6])
def test_seminorm_vs_polynomial_quadrature_2d(N):
    rng = np.random.default_rng(100 + N)
    f = HermiteExpansion.random(2, N, rng)
    cmap = {tuple(int(v) for v in a): float(c) for a, c in zip(multi_indices(2, N), f.coeffs)}
    for alpha in multi_indices(2, 2):
        for beta in multi_indices(2, 3 - int(alpha.sum())):
            ref = oracles.seminorm_2d(cmap, alpha, beta)
            assert weighted_seminorm(f, alpha, beta) == pytest.approx(ref, rel=1e-8)


# -- Bernstein --------------------------------------------------------------

def test_bernstein_examples():
    assert bernstein_check(0, (0,), (0,), 5, 1) == pytest.approx(1.0)
    assert bernstein_check(0, (1,), (0,), 5, 1) == pytest.approx(0.5)


def test_bernstein_bound_formula():
    assert bernstein_bound(10, 0) == 1.0
    assert bernstein_bound(3, 2) == pytest.approx(2 * math.sqrt(20))


@settings(max_examples=40, deadline=None)
@given(N=st.integers(0, 10), a=st.integers(0, 4), b=st.integers(0, 4), seed=st.integers(0, 2**32))
def test_bernstein_random(N, a, b, seed):
    if a + b > 4:
        b = 4 - a
    assert bernstein_check(N, (a,), (b,), 50, seed) <= 1 + 1e-9


def test_bernstein_exact_norm_below_bound():
    for d in (1, 2):
        for alpha in multi_indices(d, 2):
            for beta in multi_indices(d, 2):
                order = int(alpha.sum() + beta.sum())
                for N in (0, 5, 10):
                    assert bernstein_operator_norm(d, N, alpha, beta) <= bernstein_bound(N, order) * (1 + 1e-12)


# -- GS norms ---------------------------------------------------------------

def test_gs_theta_norm_examples():
    lin = WeightModel.linear()
    assert gs_theta_norm(HermiteExpansion.basis(1, 3, (0,)), lin) == pytest.approx(1.0)
    assert gs_theta_norm(HermiteExpansion.basis(2, 3, (1, 2)), lin) == pytest.approx(math.e ** 3)
    f = (HermiteExpansion.basis(1, 1, (0,)) + HermiteExpansion.basis(1, 1, (1,))) * (1 / math.sqrt(2))
    assert gs_theta_norm(f, lin) == pytest.approx(math.sqrt((1 + math.e ** 2) / 2))


def test_gs_theta_norm_large_weight_no_overflow():
    f = HermiteExpansion.basis(1, 400, (400,))
    from gsobs.hermite import log_gs_theta_norm
    assert log_gs_theta_norm(f, WeightModel.power(2.0)) == pytest.approx(160000.0)


@settings(max_examples=30, deadline=None)
@given(N=st.integers(0, 12), level=st.integers(12, 16), seed=st.integers(0, 1000))
def test_gs_theta_projection_bound(N, level, seed):
    f = HermiteExpansion.random(1, level, np.random.default_rng(seed))
    assert gs_theta_norm(project(f, N), WeightModel.linear()) <= math.exp(N) * f.norm() * (1 + 1e-12)


def test_pair_seminorm_examples():
    f = HermiteExpansion.basis(1, 0, (0,))
    assert gs_pair_seminorm(f, 1.0, 0.5, 0.5, 0) == pytest.approx(1.0)
    assert gs_pair_seminorm(f, 1.0, 0.5, 0.5, 1) == pytest.approx(math.sqrt(1.5))
    g = HermiteExpansion.basis(1, 5, (5,))
    assert gs_pair_seminorm(g, 1.0, 0.5, 0.5, 2) <= gs_pair_seminorm(g, 1.0, 0.5, 0.5, 3)


def test_bracket_norm_via_multinomial():
    # ||<x>^2 f||^2 = ||f||^2 + 2||x f||^2 + ||x^2 f||^2 in 1D
    f = HermiteExpansion.random(1, 6, np.random.default_rng(3))
    ref = f.norm() ** 2 + 2 * weighted_seminorm(f, (1,), (0,)) ** 2 + weighted_seminorm(f, (2,), (0,)) ** 2
    _, table = gs_pair_seminorm(f, 1.0, 0.0, 0.0, 2, return_table=True)
    assert table[(2, (0,))] == pytest.approx(math.sqrt(ref), rel=1e-12)


# -- projection and value semantics -----------------------------------------

def test_project_examples():
    f = HermiteExpansion.random(2, 5, np.random.default_rng(0))
    assert project(f, 5) == f
    assert project(HermiteExpansion.basis(1, 3, (3,)), 2).norm() == 0.0
    with pytest.raises(DomainError):
        project(f, 6)


@settings(max_examples=40, deadline=None)
@given(d=st.integers(1, 2), N=st.integers(0, 10), k=st.integers(0, 10), seed=st.integers(0, 1000))
def test_parseval_split(d, N, k, seed):
    k = min(k, N)
    f = HermiteExpansion.random(d, N, np.random.default_rng(seed))
    p = project(f, k)
    lo = np.sum(np.abs(p.coeffs) ** 2)
    hi = np.sum(np.abs(f.coeffs[len(p.coeffs):]) ** 2)
    assert lo + hi == pytest.approx(f.norm() ** 2, rel=1e-12)
    assert p.norm() <= f.norm() + 1e-15


def test_evaluate_matches_basis():
    f = HermiteExpansion.basis(2, 3, (1, 2))
    x = np.array([[0.3, -0.7], [1.1, 0.2]])
    ref = oracles.phi(1, x[:, 0]) * oracles.phi(2, x[:, 1])
    assert np.allclose(f.evaluate(x), ref, atol=1e-14)


def test_csv_roundtrip():
    f = HermiteExpansion.random(2, 4, np.random.default_rng(9))
    g = HermiteExpansion.from_csv(f.to_csv())
    assert np.array_equal(f.coeffs, g.coeffs)
    assert f.to_csv().splitlines()[0] == "alpha_1,alpha_2,real,imag"


def test_derivative_values_not_just_norms():
    # pointwise check catches sign errors that norm identities cannot
    f = HermiteExpansion.random(1, 8, np.random.default_rng(4))
    df = HermiteExpansion.from_tensor(apply_derivative(f.to_tensor(1), 0), 9)
    x = np.linspace(-3, 3, 13)
    h = 1e-5
    fd = (f.evaluate(x[:, None] + h) - f.evaluate(x[:, None] - h)) / (2 * h)
    assert np.max(np.abs(df.evaluate(x[:, None]) - fd)) < 1e-8
