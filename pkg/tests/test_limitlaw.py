import math

import numpy as np
import pytest
from scipy import integrate, special, stats

from gfmax.errors import DomainError, RegimeError
from gfmax.limitlaw import (TauTable, functionals, joint_cdf, l_equation_residual, make_triple,
                            path_value, sample_limit, tau_table)
from gfmax.rho import rho_gamma, rho_integral


def direct_path(gamma, tau, Y, lam):
    R = rho_gamma(gamma, tau).value * Y
    lam = np.asarray(lam, dtype=float)
    jump = np.where(lam >= tau, gamma * np.maximum(lam - tau, 0.0) ** (gamma - 1.0) * R, 0.0)
    return (-lam ** gamma + jump) / special.gamma(1.0 + gamma)


@pytest.fixture(scope="module")
def draws2():
    return sample_limit(2.0, 3.0, seed=5, draws=100_000)


@pytest.fixture(scope="module")
def draws3():
    return sample_limit(3.0, 2.5, seed=6, draws=20_000)


# forced triples
def test_linear_boundary_case():
    tr = make_triple(1.0, 1.0, 1.0)
    assert tr.rho_tau == 2.0
    assert path_value(tr, 1.0) == pytest.approx(1.0, abs=1e-15)
    assert path_value(tr, 0.5) == pytest.approx(-0.5, abs=1e-15)
    assert path_value(tr, 3.0) == pytest.approx(-1.0, abs=1e-15)
    M, N, L = functionals(tr)
    assert M == pytest.approx(1.0, abs=1e-15) and N == 1.0 and L == 1.0


@pytest.mark.parametrize("tau,Y", [(0.3, 1.5), (2.0, 4.0), (0.0, 1.0)])
def test_linear_closed_forms(tau, Y):
    tr = make_triple(1.0, tau, Y)
    M, N, L = functionals(tr)
    assert M == pytest.approx(-tau + (1 + tau) * Y, rel=1e-14)
    assert N == tau and L == tau


def test_quadratic_at_origin():
    tr = make_triple(2.0, 0.0, 1.0)
    M, N, L = functionals(tr)
    assert L == pytest.approx(math.sqrt(2.0), rel=1e-13)
    assert N == pytest.approx(math.sqrt(2.0), rel=1e-7)
    assert M == pytest.approx(1.0, abs=1e-12)
    assert path_value(tr, math.sqrt(2.0)) == pytest.approx(1.0, abs=1e-14)


@pytest.mark.parametrize("tau,Y", [(0.7, 1.3), (3.0, 2.0), (0.0, 5.0)])
def test_quadratic_argmax_closed_form(tau, Y):
    tr = make_triple(2.0, tau, Y)
    assert tr.L_lim == pytest.approx(Y * rho_gamma(2.0, tau).value, rel=1e-12)


def test_cubic_against_dense_grid():
    tau, Y = 0.5, 2.0
    tr = make_triple(3.0, tau, Y)
    lam = np.linspace(tau, 20.0, 10**6)
    vals = direct_path(3.0, tau, Y, lam)
    i = int(np.argmax(vals))
    assert tr.L_lim == pytest.approx(lam[i], abs=1e-4)
    assert tr.M_lim == pytest.approx(vals[i], rel=1e-5)
    assert tr.M_lim >= vals[i]


@pytest.mark.parametrize("gamma", [1.0, 1.5, 2.0, 3.0])
def test_path_value_matches_formula(gamma):
    tr = make_triple(gamma, 0.8, 1.7)
    lam = np.linspace(0.0, 6.0, 301)
    np.testing.assert_allclose(path_value(tr, lam), direct_path(gamma, 0.8, 1.7, lam),
                               rtol=1e-13, atol=1e-14)
    assert path_value(tr, 0.0) == 0.0
    before = lam[lam < 0.8]
    np.testing.assert_allclose(path_value(tr, before), -before ** gamma / special.gamma(1 + gamma),
                               rtol=1e-14)


def test_path_rejects_negative_lambda():
    with pytest.raises(DomainError):
        path_value(make_triple(2.0, 0.0, 1.0), -1.0)


@pytest.mark.parametrize("kw", [dict(gamma=0.5, tau=0.0, Y=1.0), dict(gamma=2.0, tau=0.0, Y=0.5),
                                dict(gamma=2.0, tau=-1.0, Y=1.0)])
def test_make_triple_rejects(kw):
    with pytest.raises((RegimeError, DomainError)):
        make_triple(**kw)


def test_sample_rejects_small_gamma():
    with pytest.raises(RegimeError):
        sample_limit(0.9, 3.0)


# jump-time table
@pytest.mark.parametrize("gamma,alpha", [(1.0, 2.0), (1.5, 2.5), (2.0, 3.0), (3.0, 1.5)])
def test_tau_table_against_quadrature(gamma, alpha):
    table = TauTable(gamma, alpha)
    total = rho_integral(gamma, alpha)
    for u in (0.01, 0.4, 2.0, 15.0, 400.0):
        direct, _ = integrate.quad(lambda v: rho_gamma(gamma, v).value ** -alpha, 0, u,
                                   epsabs=1e-13, epsrel=1e-11, limit=400)
        assert table.cdf(u) == pytest.approx(direct / total, abs=1e-7)
    w = np.array([1e-6, 0.1, 0.5, 0.9, 0.999, 1 - 1e-9])
    np.testing.assert_allclose(table.cdf(table.ppf(w)), w, rtol=0, atol=1e-9)
    assert table.self_test() <= 1e-7


def test_tau_table_linear_closed_form():
    table = tau_table(1.0, 2.0)
    u = np.array([0.0, 0.5, 1.0, 9.0, 1e6])
    np.testing.assert_allclose(table.cdf(u), 1.0 - 1.0 / (1.0 + u), atol=1e-9)


def test_tau_sample_ks(draws2):
    table = tau_table(2.0, 3.0)
    assert stats.kstest(draws2.tau, table.cdf).statistic <= 0.02
    assert stats.kstest(draws2.Y, stats.pareto(3.0).cdf).statistic <= 0.02


# invariants over samples
@pytest.mark.parametrize("fixture", ["draws2", "draws3"])
def test_sample_invariants(fixture, request):
    s = request.getfixturevalue(fixture)
    assert np.all(s.Y >= 1.0)
    assert np.all(s.M_lim >= 1.0 - 1e-9)
    assert np.all(s.L_lim >= s.tau)
    assert np.all(s.N_lim <= s.L_lim)
    rows = np.arange(0, len(s), 97)
    at_L = np.array([path_value(s.triple(i), s.L_lim[i]) for i in rows])
    np.testing.assert_allclose(at_L, s.M_lim[rows], rtol=1e-8, atol=1e-8)


@pytest.mark.parametrize("fixture", ["draws2", "draws3"])
def test_l_equation_residual(fixture, request):
    s = request.getfixturevalue(fixture)
    worst = 0.0
    for i in range(0, len(s), 131):
        tr = s.triple(i)
        scale = 1.0 + abs(tr.L_lim) ** (tr.gamma - 1.0)
        worst = max(worst, abs(l_equation_residual(tr)) / scale)
    assert worst <= 1e-9


@pytest.mark.parametrize("fixture", ["draws2", "draws3"])
def test_first_passage_crosses_level(fixture, request):
    s = request.getfixturevalue(fixture)
    for i in range(0, len(s), 211):
        tr = s.triple(i)
        if tr.M_lim - 1.0 <= 1e-9:
            continue
        assert path_value(tr, tr.N_lim * (1 + 1e-9) + 1e-12) >= 1.0 - 1e-9
        grid = np.linspace(0.0, tr.N_lim, 400)[:-1]
        assert np.all(path_value(tr, grid) <= 1.0 + 1e-9)


def test_safeguard_grid_never_beats_root():
    s = sample_limit(3.0, 2.0, seed=8, draws=2000)
    for i in range(0, 2000, 50):
        tr = s.triple(i)
        lam = tr.tau + np.geomspace(1e-6, 50.0 * (1 + tr.L_lim), 20_000)
        assert tr.M_lim >= path_value(tr, lam).max() - 1e-12 * max(1.0, tr.M_lim)


@pytest.mark.parametrize("u,y", [(0.2, 1.0), (0.5, 2.0), (1.0, 3.0), (3.0, 1.5), (3.0, 8.0)])
def test_joint_law(draws2, u, y):
    emp = np.mean((draws2.tau <= u) & (draws2.rho_tau * draws2.Y > y))
    assert abs(emp - joint_cdf(2.0, 3.0, u, y)) <= 0.01


def test_joint_cdf_marginal():
    table = tau_table(2.0, 3.0)
    for u in (0.3, 2.0):
        assert joint_cdf(2.0, 3.0, u, 0.0) == pytest.approx(table.cdf(u), abs=1e-8)


def test_delay_after_jump():
    h = 1e-6
    for tau in (0.05, 0.4, 2.0):
        for Y in (1.0, 3.0, 50.0):
            tr = make_triple(3.0, tau, Y)
            assert path_value(tr, tau + 2 * h) < path_value(tr, tau + h)


def test_mean_rescaling(draws2):
    other = sample_limit(2.0, 3.0, mu=-2.0, seed=5, draws=100_000)
    s = 2.0 ** 0.5
    np.testing.assert_allclose(other.tau, draws2.tau / s, rtol=1e-15)
    np.testing.assert_allclose(other.M_lim, draws2.M_lim, rtol=1e-15)
    np.testing.assert_allclose(other.L_lim, draws2.L_lim / s, rtol=1e-14)
    tr1, tr2 = draws2.triple(3), other.triple(3)
    lam = np.linspace(0.0, 5.0, 50)
    np.testing.assert_allclose(path_value(tr2, lam), path_value(tr1, s * lam), rtol=1e-13, atol=1e-14)
    indep = sample_limit(2.0, 3.0, mu=-2.0, seed=77, draws=100_000)
    assert stats.ks_2samp(indep.M_lim, draws2.M_lim).statistic <= 0.02


def test_mean_rescaled_jump_size():
    tr = make_triple(2.0, 0.5, 2.0, mu=-4.0)
    assert tr.jump == pytest.approx(4.0 ** 0.5 * rho_gamma(2.0, 2.0 * 0.5).value * 2.0, rel=1e-14)
    # at the returned argmax the path is stationary in the original units
    h = 1e-5
    assert path_value(tr, tr.L_lim) >= max(path_value(tr, tr.L_lim - h), path_value(tr, tr.L_lim + h))


def test_sampling_is_deterministic():
    a = sample_limit(1.5, 2.5, seed=3, draws=1000)
    b = sample_limit(1.5, 2.5, seed=3, draws=1000)
    assert np.array_equal(a.M_lim, b.M_lim) and np.array_equal(a.tau, b.tau)
    assert np.array_equal(a.tau[:10], sample_limit(1.5, 2.5, seed=3, draws=10).tau)
