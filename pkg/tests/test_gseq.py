import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import special

from gfmax.errors import DomainError, InvalidSpecError, ResourceError
from gfmax.gseq import (ConstantOne, Const, Custom, Farima, GSequence, LogPower, PowerLaw,
                        PowerTail, ShiftedLimitTail, sequence_from_dict, sequence_to_dict)


def farima_oracle(d, n):
    k = np.arange(n)
    return np.exp(special.gammaln(k + d) - special.gammaln(d) - special.gammaln(k + 1))


def series_oracle(coef_fn, x, terms):
    n = np.arange(terms)
    return float(np.sum(coef_fn(n) * x ** n))


# coefficients
def test_constant_one_coefficients():
    assert GSequence(ConstantOne()).coefficients(4).tolist() == [1, 1, 1, 1]


def test_farima_integer_order_coefficients():
    assert GSequence(Farima(2.0)).coefficients(4).tolist() == [1, 2, 3, 4]


def test_farima_fractional_first_terms():
    np.testing.assert_allclose(GSequence(Farima(0.4)).coefficients(3), [1.0, 0.4, 0.28],
                               rtol=1e-15)


@pytest.mark.parametrize("d", [0.1, 0.4, 0.75, 1.3, 2.5])
def test_farima_matches_gamma_ratio(d):
    got = GSequence(Farima(d)).coefficients(10_001)
    np.testing.assert_allclose(got, farima_oracle(d, 10_001), rtol=1e-10)


@given(st.floats(0.05, 3.0))
def test_farima_recurrence(d):
    g = GSequence(Farima(d)).coefficients(200)
    n = np.arange(1, 200)
    np.testing.assert_allclose(g[1:], g[:-1] * (n - 1 + d) / n, rtol=1e-12)


def test_farima_with_polynomials_is_series_quotient():
    theta, phi = (1.0, -0.5), (1.0, 0.3)
    g = GSequence(Farima(0.4, theta, phi)).coefficients(50)
    base = farima_oracle(0.4, 50)
    num = np.convolve(base, theta)[:50]
    # long division by phi
    out = np.zeros(50)
    for n in range(50):
        out[n] = num[n] - (phi[1] * out[n - 1] if n >= 1 else 0.0)
    np.testing.assert_allclose(g, out, rtol=1e-12, atol=1e-15)


def test_degenerate_phi_rejected():
    with pytest.raises(InvalidSpecError):
        GSequence(Farima(0.4, (1.0,), (0.0,)))


def test_negative_count_rejected():
    with pytest.raises(DomainError):
        GSequence(ConstantOne()).coefficients(-1)


# partial sums
@pytest.mark.parametrize("kind,n,expected", [
    (ConstantOne(), 7, 7.0), (Farima(2.0), 3, 6.0), (Farima(0.4), 3, 1.68), (Farima(0.4), 0, 0.0),
])
def test_partial_sum_examples(kind, n, expected):
    assert GSequence(kind).partial_sum(n) == pytest.approx(expected, rel=1e-15, abs=0)


@pytest.mark.parametrize("kind", [ConstantOne(), Farima(2.0), Farima(3.0),
                                  Custom((-1.0, 3.0, 2.0), PowerTail(1.0, 1.0))])
def test_prefix_difference_exact_for_integer_sequences(kind):
    seq = GSequence(kind)
    g = seq.coefficients(3000)
    sums = np.array([seq.partial_sum(n) for n in range(3001)])
    assert np.array_equal(np.diff(sums), g)


@pytest.mark.parametrize("kind", [Farima(0.4), PowerLaw(1.5), PowerLaw(1.0, LogPower(2.0))])
def test_prefix_difference_fractional_within_rounding(kind):
    seq = GSequence(kind)
    g = seq.coefficients(3000)
    sums = np.array([seq.partial_sum(n) for n in range(3001)])
    np.testing.assert_allclose(np.diff(sums), g, rtol=0, atol=4 * np.spacing(sums[1:]).max())


def test_streaming_partial_sum_beyond_cap():
    seq = GSequence(Farima(2.0), cache_cap=1000)
    n = 5000
    assert seq.partial_sum(n) == n * (n + 1) / 2


def test_cache_cap_resource_error():
    seq = GSequence(ConstantOne(), cache_cap=100)
    with pytest.raises(ResourceError, match="cap"):
        seq.prepare(101)


# extremes
def test_extremes_constant_one():
    ext = GSequence(ConstantOne()).extremes(100)
    assert (ext.g_star, ext.g_lower, ext.k_star, ext.n0) == (1.0, 0.0, 0, 0)


def test_extremes_farima_vanishing():
    ext = GSequence(Farima(0.4)).extremes(10**6)
    assert ext.g_star == 1.0 and ext.k_star == 0 and ext.certified
    assert np.all(np.diff(GSequence(Farima(0.4)).coefficients(10**6)) < 0)


def test_extremes_custom_prefix():
    ext = GSequence(Custom((-1.0, 3.0, 2.0), PowerTail(1.0, 0.5))).extremes(1000)
    assert (ext.g_star, ext.g_lower, ext.k_star) == (3.0, -1.0, 1)
    assert ext.n0 == 2


def test_extremes_diverging_has_no_argmax():
    ext = GSequence(Farima(2.0)).extremes(1000)
    assert math.isinf(ext.g_star) and ext.k_star is None


def test_extremes_signed_farima_flagged():
    seq = GSequence(Farima(0.4, (1.0, -0.5)))
    ext = seq.extremes(10_000)
    g = seq.coefficients(10_000)
    assert ext.g_star == g.max() and ext.g_lower == min(0.0, g.min())
    assert ext.k_star == int(np.argmax(g))


@given(st.lists(st.floats(-2, 5, allow_nan=False), min_size=1, max_size=8))
def test_extremes_invariants(prefix):
    seq = GSequence(Custom(tuple(prefix), ShiftedLimitTail(0.5, 0.25)))
    ext = seq.extremes(500)
    g = seq.coefficients(500)
    assert ext.g_star > 0 and ext.g_lower <= 0
    if ext.k_star is not None:
        assert g[ext.k_star] == ext.g_star
        assert np.all(g[:ext.k_star] < ext.g_star)
    G = np.array([seq.partial_sum(n) for n in range(501)])
    assert np.all(g[ext.n0:] >= 0) and np.all(G[ext.n0:] >= 0)


# scale function
def test_scale_constant_one():
    assert GSequence(ConstantOne()).scale_U(50.0) == pytest.approx(50.0, rel=1e-12)


def test_scale_farima_asymptotic():
    assert GSequence(Farima(2.0)).scale_U(100.0, "asymptotic") == pytest.approx(10.0, rel=1e-15)


def test_scale_farima_exact_closed_form():
    u = GSequence(Farima(0.5)).scale_U(20.0, "exact")
    assert abs(u ** 0.5 - 20.0) <= 1e-9 * 20.0


@pytest.mark.parametrize("gamma,t", [(1.5, 100.0), (0.6, 40.0), (2.0, 1e3)])
def test_scale_exact_power_law_against_series(gamma, t):
    seq = GSequence(PowerLaw(gamma, Const(1.0)))
    u = seq.scale_U(t, "exact")
    x = 1.0 - 1.0 / u
    val = series_oracle(lambda n: (n + 1.0) ** (gamma - 1.0), x, int(u * 80))
    assert abs(val - t) <= 1e-9 * t


def test_scale_farima_polynomial_constant():
    seq = GSequence(Farima(2.0, (1.0,), (1.0, -0.5)))
    assert seq.farima_c == pytest.approx(0.5)
    assert seq.scale_U(200.0, "asymptotic") == pytest.approx(10.0)


def test_scale_below_range():
    with pytest.raises(DomainError):
        GSequence(ConstantOne()).scale_U(0.5)


# Karamata diagnostics
def test_karamata_constant_one_exact():
    r = GSequence(ConstantOne()).karamata_check(1000, 1.0)
    assert r[0] <= 1e-12 and r[1] <= 1e-12


def test_karamata_farima_two():
    assert max(GSequence(Farima(2.0)).karamata_check(10**4, 1.0)) < 0.01


def test_karamata_farima_fractional():
    assert max(GSequence(Farima(0.4)).karamata_check(10**5, 2.0)) < 0.02


@pytest.mark.parametrize("kind", [Farima(0.4), Farima(2.0), PowerLaw(1.5)])
@pytest.mark.parametrize("x", [0.5, 1.0, 2.0])
def test_karamata_residuals_shrink(kind, x):
    seq = GSequence(kind)
    res = [seq.karamata_check(n, x) for n in (100, 1000, 10_000, 100_000, 1_000_000)]
    for i in (0, 1):
        r = [v[i] for v in res]
        assert all(b <= a + 1e-12 for a, b in zip(r, r[1:]))


def test_karamata_epsilon_only_for_log_power():
    assert GSequence(Farima(0.4)).karamata_epsilon is None
    eps = GSequence(PowerLaw(1.0, LogPower(2.0))).karamata_epsilon
    assert eps(math.e ** 3) == pytest.approx(2.0 / 3.0)


# JSON
@pytest.mark.parametrize("obj", [
    {"kind": "farima", "d": 0.4, "theta": [1.0, -0.5], "phi": [1.0, 0.2]},
    {"kind": "power_law", "gamma": 1.0, "slowly_varying": "log_power", "p": 2.0},
    {"kind": "power_law", "gamma": 0.7, "slowly_varying": "const", "c": 1.5},
    {"kind": "constant_one"},
    {"kind": "custom", "prefix": [-1.0, 3.0, 2.0], "tail": {"rule": "power", "scale": 1.0, "gamma": 0.5}},
    {"kind": "custom", "prefix": [1.0], "tail": {"rule": "shifted_limit", "limit": 2.0, "offset": 1.0}},
])
def test_json_round_trip(obj):
    seq = sequence_from_dict(dict(obj, schema_version=1))
    assert sequence_to_dict(seq) == obj
    assert sequence_from_dict(sequence_to_dict(seq)).kind == seq.kind


@pytest.mark.parametrize("obj,match", [
    ({"kind": "farima", "d": 0.4, "extra": 1}, "unknown field"),
    ({"kind": "farima"}, "missing field 'd'"),
    ({"kind": "wavelet"}, "sequence.kind"),
    ({"kind": "custom", "prefix": [1], "tail": {"rule": "power", "scale": 1, "gamma": 1, "x": 0}},
     "unknown field"),
])
def test_json_rejects_malformed(obj, match):
    with pytest.raises(InvalidSpecError, match=match):
        sequence_from_dict(obj)


@pytest.mark.parametrize("kind", [PowerLaw(0.7), PowerLaw(1.0), PowerLaw(2.0), PowerLaw(1.5, Const(2.0)),
                                  Custom((-1.0, 3.0, 2.0), PowerTail(1.0, 0.5)),
                                  Custom((1.0,), ShiftedLimitTail(2.0, 1.0))])
@pytest.mark.parametrize("u", [64.0, 300.0, 5000.0])
def test_generating_function_closed_form_matches_series(kind, u):
    seq = GSequence(kind)
    x = 1.0 - 1.0 / u
    n = np.arange(int(u * 60))
    oracle = math.fsum(seq.coefficients(len(n)) * x ** n)
    assert seq.g_at(u) == pytest.approx(oracle, rel=1e-10)
