import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gfmax.errors import DomainError
from gfmax.gseq import ConstantOne, Const, Custom, Farima, GSequence, PowerLaw, PowerTail
from gfmax.psi import (lln_residual, make_context, psi_conditional, psi_envelope, psi_forward,
                       psi_inverse, vanishing_closed_form)
from gfmax.rho import rho_gamma
from gfmax.tails import InnovationSpec


def brute_forward(seq, n, x, K):
    g = seq.coefficients(K)
    G = seq.prefix_array(n + K)[n:n + K]
    return max(0.0, float(np.max(g * x - G)))


def brute_inverse(seq, n, t, K):
    g = seq.coefficients(K)
    G = seq.prefix_array(n + K)[n:n + K]
    obj = np.full(K, np.inf)
    pos = g > 0
    obj[pos] = (t + G[pos]) / g[pos]
    k = int(np.argmin(obj))
    return float(obj[k]), k


def brute_envelope(seq, n, x, K):
    g = seq.coefficients(K)
    G = seq.prefix_array(n + K)
    i = np.arange(1, n + K)
    vals = np.where(i < n, -G[i], (x + 1.0) * g[np.maximum(i - n, 0)] - G[i])
    return float(vals.max())


@pytest.fixture(scope="module")
def ctx_one():
    return make_context(GSequence(ConstantOne()))


@pytest.fixture(scope="module")
def ctx_f04():
    return make_context(GSequence(Farima(0.4)))


@pytest.fixture(scope="module")
def ctx_f2():
    return make_context(GSequence(Farima(2.0)))


# forward
def test_forward_constant_one(ctx_one):
    assert psi_forward(ctx_one, 3, 10.0) == 7.0


@pytest.mark.parametrize("fixture", ["ctx_one", "ctx_f04", "ctx_f2"])
def test_forward_at_zero(fixture, request):
    ctx = request.getfixturevalue(fixture)
    assert psi_forward(ctx, ctx.extremes.n0 + 3, 0.0) == 0.0


def test_forward_farima_brute_force(ctx_f04):
    assert psi_forward(ctx_f04, 5, 100.0) == brute_forward(ctx_f04.seq, 5, 100.0, 10**5)


def test_forward_rejects_small_n():
    ctx = make_context(GSequence(Custom((-1.0, 3.0, 2.0), PowerTail(1.0, 0.5))))
    with pytest.raises(DomainError):
        psi_forward(ctx, ctx.extremes.n0 - 1, 1.0)


# inverse
def test_inverse_constant_one(ctx_one):
    res = psi_inverse(ctx_one, 4, 10.0)
    assert (res.value, res.k_index) == (14.0, 0)


def test_inverse_vanishing_closed_form(ctx_f04):
    for n in (1, 10, 200):
        t0, fn = vanishing_closed_form(ctx_f04, n)
        for t in t0 + np.array([0.0, 0.1, 10.0, 1e4]):
            res = psi_inverse(ctx_f04, n, t)
            assert res.k_index == ctx_f04.extremes.k_star
            assert res.value == pytest.approx(fn(t), rel=1e-14)


def test_inverse_closed_form_with_interior_maximum():
    ctx = make_context(GSequence(Custom((1.0, 2.5, 0.5), PowerTail(1.0, 0.5))))
    assert ctx.extremes.k_star == 1
    for n in (ctx.extremes.n0, 30):
        t0, fn = vanishing_closed_form(ctx, n)
        for t in t0 + np.array([0.0, 1.0, 100.0]):
            res = psi_inverse(ctx, n, t)
            assert res.value == pytest.approx(fn(t), rel=1e-14)
            # ties at t0 go to the smallest index
            assert res.k_index == (0 if t == t0 > 0 else 1)


def test_inverse_diverging_scale(ctx_f2):
    t = 1e6
    U = ctx_f2.seq.scale_U(t, "asymptotic")
    n = int(math.floor(U))
    ratio = psi_inverse(ctx_f2, n, t).value / U
    assert ratio == pytest.approx(rho_gamma(2.0, 1.0).value, rel=0.05)


def test_inverse_rejects_negative(ctx_one):
    with pytest.raises(DomainError):
        psi_inverse(ctx_one, 4, -1.0)


def test_inverse_at_zero_is_vanishing_endpoint(ctx_f2):
    n = 10
    x_n = psi_inverse(ctx_f2, n, 0.0).value
    assert psi_forward(ctx_f2, n, x_n) == 0.0
    assert psi_forward(ctx_f2, n, x_n * (1 + 1e-6)) > 0.0


# conditional profiles
def test_conditional_before_n(ctx_one):
    assert psi_conditional(ctx_one, 3, 5, 123.0) == -3.0


def test_conditional_at_n(ctx_one):
    assert psi_conditional(ctx_one, 5, 5, 10.0) == 6.0


def test_conditional_farima(ctx_f2):
    assert psi_conditional(ctx_f2, 4, 2, 3.0) == 2.0


def test_envelope_constant_one(ctx_one):
    assert psi_envelope(ctx_one, 2, 10.0) == 9.0


def test_envelope_vanishing_form(ctx_f04):
    n, x = 10, 1e4
    ext = ctx_f04.extremes
    want = (x + 1.0) * ext.g_star - ctx_f04.seq.partial_sum(n + ext.k_star)
    assert psi_envelope(ctx_f04, n, x) == pytest.approx(want, rel=1e-14)


@pytest.mark.parametrize("kind", [ConstantOne(), Farima(0.4), Farima(2.0),
                                  Custom((-1.0, 3.0, 2.0), PowerTail(1.0, 0.5))])
@pytest.mark.parametrize("n,x", [(1, 0.0), (3, 0.5), (8, 4.0), (40, 30.0)])
def test_envelope_matches_scan(kind, n, x):
    ctx = make_context(GSequence(kind))
    assert psi_envelope(ctx, n, x) == pytest.approx(brute_envelope(ctx.seq, n, x, 20_000),
                                                   rel=1e-13, abs=1e-13)


# Monte Carlo law of large numbers
def test_lln_degenerate(ctx_one):
    innov = InnovationSpec(alpha=2.5, mu=-1.0, degenerate=True)
    assert lln_residual(ctx_one, 100, 50, 1, innov=innov) == 0.0


def test_lln_constant_one(ctx_one):
    assert lln_residual(ctx_one, 10_000, 1000, 11) < 0.05


def test_lln_farima(ctx_f2):
    assert lln_residual(ctx_f2, 1000, 1000, 12) < 0.10


# properties
KINDS = st.one_of(
    st.floats(0.2, 2.5).map(lambda d: Farima(d)),
    st.tuples(st.floats(0.3, 2.5), st.floats(0.5, 2.0)).map(lambda p: PowerLaw(p[0], Const(p[1]))),
    st.tuples(st.lists(st.floats(-1.0, 3.0), min_size=1, max_size=5),
              st.floats(0.5, 2.0), st.floats(0.3, 2.0)).map(
        lambda p: Custom(tuple(p[0]), PowerTail(p[1], p[2]))),
)


@settings(max_examples=60)
@given(KINDS, st.integers(0, 200), st.floats(0.1, 1e3))
def test_round_trip(kind, dn, t):
    ctx = make_context(GSequence(kind), search_horizon=4096)
    n = ctx.extremes.n0 + dn
    res = psi_inverse(ctx, n, t)
    assert abs(psi_forward(ctx, n, res.value) - t) <= 1e-9 * t


@settings(max_examples=40)
@given(KINDS, st.integers(0, 100), st.floats(0.1, 1e3))
def test_inverse_matches_brute_force(kind, dn, t):
    ctx = make_context(GSequence(kind), search_horizon=4096)
    n = ctx.extremes.n0 + dn
    res = psi_inverse(ctx, n, t)
    assert (res.value, res.k_index) == brute_inverse(ctx.seq, n, t, 10 * res.scan_bound)
    assert res.value >= t / ctx.extremes.g_star * (1 - 1e-15)


@settings(max_examples=30)
@given(KINDS)
def test_forward_monotone_in_n_and_convex(kind):
    ctx = make_context(GSequence(kind), search_horizon=4096)
    n0 = ctx.extremes.n0
    xs = np.linspace(0.0, 50.0, 41)
    rows = np.array([[psi_forward(ctx, n, x) for x in xs] for n in (n0, n0 + 1, n0 + 7, n0 + 40)])
    assert np.all(np.diff(rows, axis=0) <= 1e-9 * (1 + np.abs(rows[:-1])))
    assert np.all(np.diff(rows, n=2, axis=1) >= -1e-9 * (1 + np.abs(rows[:, 1:-1])))


def test_lower_bound_diverging(ctx_f2):
    xi0 = rho_gamma(2.0, 0.0).value
    for t in (1e5, 1e6):
        U = ctx_f2.seq.scale_U(t, "asymptotic")
        for n in (1, int(U / 4), int(U)):
            assert psi_inverse(ctx_f2, n, t).value / U >= 0.95 * xi0


def test_context_rejects_nonnegative_mean():
    with pytest.raises(DomainError):
        make_context(GSequence(ConstantOne()), mu=0.0)
