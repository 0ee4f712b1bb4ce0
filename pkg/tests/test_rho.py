import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate, special

from gfmax.errors import DomainError, RegimeError
from gfmax.rho import (KernelParams, beta_function, rho_gamma, rho_integral, rho_values, xi,
                       xi0_at_one, xi_objective)


def rho2_closed(u):
    return u + np.sqrt(2.0 + u * u)


def rho2_integral_oracle(alpha):
    # substitution s = u + sqrt(2 + u^2), du = (1/2 + 1/s^2) ds, s from sqrt(2)
    val, _ = integrate.quad(lambda s: s ** -alpha * (0.5 + s ** -2), math.sqrt(2.0), np.inf,
                            epsabs=0, epsrel=1e-13)
    return val


def rho2_integral_closed(alpha):
    return 2.0 ** (-(alpha + 1.0) / 2.0) * 2.0 * alpha / (alpha * alpha - 1.0)


def grid_min(gamma, a, x, y_max=50.0, n=10**6):
    y = np.linspace(y_max / n, y_max, n)
    return float(((a + (x + y) ** gamma) / (gamma * y ** (gamma - 1.0))).min())


# examples
def test_xi_linear_case():
    kv = xi(KernelParams(gamma=1.0, a=3.0), 2.0)
    assert (kv.value, kv.minimizer) == (5.0, 0.0)


def test_xi_at_zero_quadratic():
    assert xi(KernelParams(gamma=2.0, a=2.0), 0.0).value == pytest.approx(math.sqrt(2.0), rel=1e-12)


def test_xi_a_zero_at_one():
    assert xi(KernelParams(gamma=2.0, a=0.0), 1.0).value == pytest.approx(2.0, rel=1e-12)
    assert xi0_at_one(2.0) == 2.0


def test_rho_one():
    assert rho_gamma(1.0, 0.7).value == pytest.approx(1.7, rel=1e-15)


def test_rho_two_at_one():
    assert rho_gamma(2.0, 1.0).value == pytest.approx(1.0 + math.sqrt(3.0), rel=1e-12)


def test_rho_three_against_grid():
    v = rho_gamma(3.0, 0.5).value
    assert abs(v - grid_min(3.0, 6.0, 0.5)) <= 1e-7 * v


@pytest.mark.parametrize("gamma,x,a", [(1.5, 0.3, 1.0), (2.5, 2.0, 0.5), (4.0, 0.0, 3.0)])
def test_xi_against_grid(gamma, x, a):
    v = xi(KernelParams(gamma=gamma, a=a), x).value
    assert v <= grid_min(gamma, a, x) + 1e-12
    assert abs(v - grid_min(gamma, a, x)) <= 1e-6 * v


def test_xi_zero_closed_form():
    for gamma, a in [(1.5, 2.0), (3.0, 0.7), (2.0, 5.0)]:
        want = a ** (1 / gamma) * (gamma - 1.0) ** (1 / gamma - 1.0)
        assert xi(KernelParams(gamma=gamma, a=a), 0.0).value == pytest.approx(want, rel=1e-10)


def test_rho_integral_linear():
    assert rho_integral(1.0, 2.0) == pytest.approx(1.0, rel=1e-12)


@pytest.mark.parametrize("alpha", [2.5, 3.0, 4.0])
def test_rho_integral_quadratic_closed_form(alpha):
    want = rho2_integral_closed(alpha)
    assert rho2_integral_oracle(alpha) == pytest.approx(want, rel=1e-11)
    assert rho_integral(2.0, alpha) == pytest.approx(want, rel=1e-8)


def test_rho_integral_quadratic_alpha_three_value():
    assert rho_integral(2.0, 3.0) == pytest.approx(0.1875, rel=1e-8)


def test_rho_integral_against_trapezoid():
    gamma, alpha = 1.5, 2.5
    u = np.linspace(0.0, 1e3, 10**6)
    f = rho_values(gamma, u) ** -alpha
    head = integrate.trapezoid(f, u)
    slope = xi0_at_one(gamma)
    # rho(u) lies between u*slope and the chord bound rho(1e3)*u/1e3 beyond 1e3
    lo = (slope * 1e3) ** -alpha * 1e3 / (alpha - 1.0) * (slope * 1e3 / rho_values(gamma, 1e3)) ** alpha
    hi = (slope * 1e3) ** -alpha * 1e3 / (alpha - 1.0)
    assert lo <= hi
    oracle = head + 0.5 * (lo + hi)
    assert rho_integral(gamma, alpha) == pytest.approx(oracle, rel=1e-6)


def test_rho_integral_direct_quad():
    gamma, alpha = 3.0, 2.2
    val, _ = integrate.quad(lambda u: rho_gamma(gamma, u).value ** -alpha, 0, np.inf,
                            epsabs=0, epsrel=1e-10, limit=400)
    assert rho_integral(gamma, alpha) == pytest.approx(val, rel=1e-7)


def test_rho_integral_divergent():
    with pytest.raises(DomainError):
        rho_integral(2.0, 1.0)


# beta function
@pytest.mark.parametrize("p,q,want", [(1, 1, 1.0), (2, 3, 1 / 12), (0.5, 0.5, math.pi)])
def test_beta_values(p, q, want):
    assert beta_function(p, q) == pytest.approx(want, rel=1e-12)


@given(st.floats(0.05, 20), st.floats(0.05, 20))
def test_beta_matches_scipy(p, q):
    assert beta_function(p, q) == pytest.approx(special.beta(p, q), rel=1e-12)


def test_beta_rejects_nonpositive():
    with pytest.raises(DomainError):
        beta_function(0.0, 1.0)


# properties
X_GRID = np.array([0.0, 0.01, 0.3, 1.0, 4.0, 25.0, 300.0])


@pytest.mark.parametrize("gamma", [1.0, 1.3, 2.0, 3.5])
@pytest.mark.parametrize("a", [0.5, 1.0, 2.0, 5.0])
def test_scaling_law(gamma, a):
    lhs = xi(KernelParams(gamma=gamma, a=a), X_GRID).value
    rhs = a ** (1 / gamma) * xi(KernelParams(gamma=gamma, a=1.0), a ** (-1 / gamma) * X_GRID).value
    assert np.all(np.abs(lhs - rhs) <= 1e-9 * lhs)


@given(st.floats(1.0, 5.0), st.floats(0.01, 10), st.floats(0.01, 10), st.floats(0, 100))
def test_monotone_in_a(gamma, a, b, x):
    a, b = min(a, b), max(a, b)
    va = xi(KernelParams(gamma=gamma, a=a), x).value
    vb = xi(KernelParams(gamma=gamma, a=b), x).value
    assert va <= vb * (1 + 1e-12)


@given(st.floats(1.01, 5.0), st.floats(0.01, 10), st.floats(0, 100))
def test_minimizer_is_a_minimum(gamma, a, x):
    p = KernelParams(gamma=gamma, a=a)
    kv = xi(p, x)
    assert kv.value > 0 and kv.minimizer > 0
    assert abs(float(xi_objective(p, x, kv.minimizer)) - kv.value) <= 1e-12 * kv.value + kv.certified_gap
    for y in (kv.minimizer - kv.certified_gap, kv.minimizer + kv.certified_gap,
              0.5 * kv.minimizer, 2.0 * kv.minimizer):
        if y > 0:
            assert float(xi_objective(p, x, y)) >= kv.value * (1 - 1e-14)


def test_rho_two_on_grid():
    u = np.linspace(0.0, 100.0, 2001)
    assert np.max(np.abs(rho_values(2.0, u) - rho2_closed(u))) <= 1e-10


def test_rho_linear_growth():
    for gamma in (1.5, 2.0, 3.0):
        u = 1e8
        assert rho_gamma(gamma, u).value / u == pytest.approx(xi0_at_one(gamma), rel=1e-6)


# errors
def test_gamma_below_one_rejected():
    with pytest.raises(RegimeError):
        rho_gamma(0.5, 1.0)
    with pytest.raises(RegimeError):
        rho_integral(0.5, 2.0)


def test_negative_argument_rejected():
    with pytest.raises(DomainError):
        rho_gamma(2.0, -1.0)


def test_unattained_minimum_rejected():
    with pytest.raises(DomainError):
        xi(KernelParams(gamma=2.0, a=0.0), 0.0)


@pytest.mark.parametrize("kw", [dict(gamma=0.0), dict(gamma=1.0, a=-1.0), dict(gamma=1.0, alpha=1.0)])
def test_kernel_params_validation(kw):
    with pytest.raises(DomainError):
        KernelParams(**kw)
