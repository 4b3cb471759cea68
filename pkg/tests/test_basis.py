import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.polynomial import legendre as npleg

from fractumor.basis import (QuadratureError, SpectralField, field_drho, gauss_rule,
                             legendre_eval, lobatto_rule, spherical_laplacian_eval, trial_basis,
                             trial_deriv, trial_eval, trial_table)


@pytest.mark.parametrize("N", [0, 1, 5, 20, 64])
def test_gauss_rule_matches_numpy(N):
    x, w = npleg.leggauss(N + 1)
    rule = gauss_rule(N)
    assert np.allclose(rule.nodes, x, atol=1e-14)
    assert np.allclose(rule.weights, w, atol=1e-14)


@pytest.mark.parametrize("N", [1, 2, 7, 30])
def test_lobatto_nodes_are_derivative_roots(N):
    rule = lobatto_rule(N)
    inner = np.sort(npleg.legroots(npleg.legder([0] * N + [1])))
    assert rule.nodes[0] == -1.0 and rule.nodes[-1] == 1.0
    assert np.allclose(rule.nodes[1:-1], inner, atol=1e-13)
    assert np.isclose(rule.weights.sum(), 2.0, atol=1e-14)


def test_rules_reject_bad_sizes():
    with pytest.raises(ValueError):
        gauss_rule(-1)
    with pytest.raises(ValueError):
        lobatto_rule(0)
    assert issubclass(QuadratureError, RuntimeError)


def _random_product(rng, deg_a, deg_b):
    a = npleg.Legendre(rng.uniform(-1, 1, deg_a + 1))
    b = npleg.Legendre(rng.uniform(-1, 1, deg_b + 1))
    return a * b


@settings(max_examples=40, deadline=None)
@given(N=st.integers(1, 60), seed=st.integers(0, 2**31 - 1))
def test_gauss_exact_to_degree_2n_plus_1(N, seed):
    f = _random_product(np.random.default_rng(seed), N, N + 1)
    exact = f.integ(lbnd=-1)(1.0)
    assert abs(gauss_rule(N).integrate(f) - exact) <= 1e-12 * max(1.0, abs(exact))


@settings(max_examples=40, deadline=None)
@given(N=st.integers(1, 60), seed=st.integers(0, 2**31 - 1))
def test_lobatto_exact_to_degree_2n_minus_1(N, seed):
    f = _random_product(np.random.default_rng(seed), N, N - 1)
    exact = f.integ(lbnd=-1)(1.0)
    assert abs(lobatto_rule(N).integrate(f) - exact) <= 1e-12 * max(1.0, abs(exact))


def test_legendre_values_against_numpy():
    x = np.linspace(-1, 1, 7)
    for n in (0, 1, 4, 11):
        assert np.allclose([legendre_eval(n, xi) for xi in x],
                           npleg.legval(x, [0] * n + [1]), atol=1e-14)


def test_first_trial_function_is_shifted_parabola():
    # p_0 in rho: L_0 - (3/4) L_1 - (1/4) L_2 with x = 2 rho - 1 equals -(3/2)(rho^2 - 1)
    rho = np.linspace(0, 1, 9)
    vals = [trial_eval(0, 2 * r - 1) for r in rho]
    assert np.allclose(vals, -1.5 * (rho**2 - 1), atol=1e-15)
    assert trial_eval(0, 0.0) == pytest.approx(1.125, abs=1e-15)


@pytest.mark.parametrize("N", [0, 1, 10, 50, 100])
def test_trial_boundary_conditions(N):
    P, dP, _ = trial_table(N, np.array([-1.0, 1.0]))
    # Dirichlet at rho = 1 (x = 1), Neumann at rho = 0 (x = -1)
    assert np.max(np.abs(P[:, 1])) <= 1e-12
    assert np.max(np.abs(dP[:, 0])) <= 1e-12


def test_trial_basis_nodes_and_matrices():
    B = trial_basis(12)
    assert B.size == 13
    assert np.allclose(B.rho_nodes, 0.5 * (gauss_rule(12).nodes + 1))
    V, D, L = B.matrices(B.rho_nodes)
    assert np.array_equal(V, B.values_at_nodes)
    assert np.allclose(D, B.drho_at_nodes)
    assert np.allclose(L, B.lap_at_nodes)


def test_interpolation_reproduces_smooth_profile():
    B = trial_basis(16)
    f = lambda r: 2 - r**2 - r**4
    fld = SpectralField(B.interpolate(f(B.rho_nodes)), B)
    r = np.linspace(0, 1, 50)
    assert np.allclose(fld(r), f(r), atol=1e-13)
    assert np.allclose(field_drho(fld, r), -2 * r - 4 * r**3, atol=1e-12)
    # f'' + 2 f' / rho
    rr = r[1:]
    assert np.allclose(spherical_laplacian_eval(fld, rr), -6 - 20 * rr**2, atol=1e-10)
    with pytest.raises(ValueError):
        spherical_laplacian_eval(fld, np.array([0.0]))


def test_trial_derivative_by_finite_difference():
    h = 1e-6
    for i in (0, 3, 9):
        for x in (-0.7, 0.1, 0.8):
            fd = (trial_eval(i, x + h) - trial_eval(i, x - h)) / (2 * h)
            assert trial_deriv(i, x) == pytest.approx(fd, abs=1e-7)
