"""Variational kernels and their integral constants.

``xi_a(x) = min_{y>0} (a + (x+y)**gamma) / (gamma * y**(gamma-1))`` and
``rho_gamma = xi_{Gamma(1+gamma)}``.

For ``gamma > 1`` and ``x > 0`` the minimizer is found from its first-order
condition. Writing ``w = 1/(x+y)`` it reads
``1 - x*w = ((gamma-1)/gamma) * (a*w**gamma + 1)``, whose left side decreases
and right side increases in ``w``, so plain bisection brackets the root to
the last bit. At ``x = 0`` a golden-section search on ``y`` is used.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy import integrate, special

from .errors import DomainError, RegimeError

__all__ = [
    "KernelParams", "KernelValue", "xi", "rho_gamma", "rho_values",
    "xi_objective", "rho_integral", "beta_function", "xi0_at_one",
]

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class KernelParams:
    """Parameters of ``xi_a``.

    Attributes
    ----------
    gamma : float
        Exponent, ``gamma >= 1`` for kernel evaluation.
    a : float
        Subscript ``a >= 0``.
    alpha : float
        Tail index used by integral constants, ``alpha > 1``.
    """

    gamma: float
    a: float = 0.0
    alpha: float = 2.0

    def __post_init__(self):
        if not self.gamma > 0:
            raise DomainError("gamma must be positive")
        if not self.a >= 0:
            raise DomainError("a must be nonnegative")
        if not self.alpha > 1:
            raise DomainError("alpha must exceed 1")


@dataclass(frozen=True)
class KernelValue:
    """Minimum ``value``, its ``minimizer`` and the final bracket width."""

    value: float
    minimizer: float
    certified_gap: float


@njit(cache=True)
def _objective(a, x, y, g):
    return (a + (x + y) ** g) / (g * y ** (g - 1.0))


@njit(cache=True)
def _golden_at_zero(a, g):
    lo = 0.0
    hi = 1.0
    while _objective(a, 0.0, 2.0 * hi, g) < _objective(a, 0.0, hi, g):
        hi *= 2.0
    hi *= 2.0
    c = hi - _INV_PHI * (hi - lo)
    d = lo + _INV_PHI * (hi - lo)
    fc = _objective(a, 0.0, c, g)
    fd = _objective(a, 0.0, d, g)
    for _ in range(400):
        if hi - lo <= 4e-16 * hi:
            break
        if fc <= fd:
            hi = d
            d = c
            fd = fc
            c = hi - _INV_PHI * (hi - lo)
            fc = _objective(a, 0.0, c, g)
        else:
            lo = c
            c = d
            fc = fd
            d = lo + _INV_PHI * (hi - lo)
            fd = _objective(a, 0.0, d, g)
    y = c if fc <= fd else d
    return _objective(a, 0.0, y, g), y, hi - lo


@njit(cache=True)
def _xi_scalar(a, x, g):
    if g == 1.0:
        return a + x, 0.0, 0.0
    if x == 0.0:
        return _golden_at_zero(a, g)
    if a == 0.0:
        y = (g - 1.0) * x
        return _objective(0.0, x, y, g), y, 0.0
    c = (g - 1.0) / g
    lo = 0.0
    hi = min(1.0 / x, (1.0 / (a * (g - 1.0))) ** (1.0 / g))
    for _ in range(3000):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        h = 1.0 - x * mid - c * (a * mid ** g + 1.0)
        if h > 0.0:
            lo = mid
        else:
            hi = mid
    y_hi = (1.0 - x * lo) / lo if lo > 0.0 else np.inf
    y_lo = (1.0 - x * hi) / hi
    f_lo = _objective(a, x, y_lo, g)
    f_hi = _objective(a, x, y_hi, g) if lo > 0.0 else np.inf
    if f_hi < f_lo:
        return f_hi, y_hi, y_hi - y_lo
    return f_lo, y_lo, y_hi - y_lo


@njit(cache=True)
def _xi_array(a, x, g, value, y, gap):
    for i in range(x.size):
        value[i], y[i], gap[i] = _xi_scalar(a[i], x[i], g)


def _check_gamma(gamma):
    if gamma < 1:
        raise RegimeError(
            f"xi/rho kernels are only defined for gamma >= 1 (got {gamma!r}); "
            "for 0 < gamma < 1 the vanishing-coefficient asymptote does not use them")


def _evaluate(a, x, gamma):
    gamma = float(gamma)
    _check_gamma(gamma)
    a_arr, x_arr = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(x, dtype=float))
    if np.any(x_arr < 0) or np.any(~np.isfinite(x_arr)):
        raise DomainError("x must be finite and nonnegative")
    if np.any(a_arr < 0):
        raise DomainError("a must be nonnegative")
    if gamma > 1 and np.any((a_arr == 0) & (x_arr == 0)):
        raise DomainError("xi_0(0) is not attained (infimum 0 at y -> 0)")
    flat_a = np.array(a_arr, dtype=float).ravel()
    flat_x = np.array(x_arr, dtype=float).ravel()
    value = np.empty_like(flat_x)
    y = np.empty_like(flat_x)
    gap = np.empty_like(flat_x)
    _xi_array(flat_a, flat_x, gamma, value, y, gap)
    shape = x_arr.shape
    if shape == ():
        return KernelValue(float(value[0]), float(y[0]), float(gap[0]))
    return KernelValue(value.reshape(shape), y.reshape(shape), gap.reshape(shape))


def xi(params: KernelParams, x) -> KernelValue:
    """Evaluate ``xi_a(x)`` and its minimizer ``kappa_a(x)``.

    Parameters
    ----------
    params : KernelParams
        ``gamma >= 1`` and ``a >= 0``.
    x : float or array_like
        Nonnegative argument(s).

    Returns
    -------
    KernelValue
        Fields are scalars for scalar ``x`` and arrays otherwise.

    Raises
    ------
    RegimeError
        If ``gamma < 1``.
    DomainError
        If ``x < 0`` or ``a = x = 0`` with ``gamma > 1``.

    Examples
    --------
    >>> xi(KernelParams(gamma=1.0, a=3.0), 2.0).value
    5.0
    """
    return _evaluate(params.a, x, params.gamma)


def rho_gamma(gamma: float, u) -> KernelValue:
    """Evaluate ``rho_gamma(u) = xi_{Gamma(1+gamma)}(u)``."""
    return _evaluate(special.gamma(1.0 + gamma), u, gamma)


def rho_values(gamma: float, u) -> np.ndarray:
    """Values of ``rho_gamma`` only, as a float array."""
    return np.asarray(rho_gamma(gamma, np.asarray(u, dtype=float)).value, dtype=float)


def xi_objective(params: KernelParams, x, y):
    """The function ``(a + (x+y)**gamma) / (gamma y**(gamma-1))`` minimized by xi."""
    g = params.gamma
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return (params.a + (x + y) ** g) / (g * y ** (g - 1.0))


def xi0_at_one(gamma: float) -> float:
    """Slope of ``xi_a`` at infinity, ``(gamma/(gamma-1))**(gamma-1)`` (1 at gamma=1)."""
    _check_gamma(gamma)
    if gamma == 1:
        return 1.0
    return (gamma / (gamma - 1.0)) ** (gamma - 1.0)


def rho_integral(gamma: float, alpha: float) -> float:
    """Compute ``int_0^inf rho_gamma(u)**(-alpha) du``.

    The range is split at ``u = 1``. The outer part is mapped by ``v = 1/u``
    with the scaling ``rho(1/v) = xi_{a v**gamma}(1) / v``, which turns it into
    ``int_0^1 v**(alpha-2) xi_{a v**gamma}(1)**(-alpha) dv``; the algebraic
    endpoint factor is handled by an algebraic-weight QUADPACK rule.

    Raises
    ------
    DomainError
        If ``alpha <= 1`` (the integral diverges).
    RegimeError
        If ``gamma < 1``.
    """
    if not alpha > 1:
        raise DomainError(f"integral of rho^-alpha diverges for alpha={alpha!r} <= 1")
    _check_gamma(gamma)
    if gamma == 1:
        return 1.0 / (alpha - 1.0)
    a = special.gamma(1.0 + gamma)

    def inner(u):
        return _xi_scalar(a, u, gamma)[0] ** (-alpha)

    def outer(v):
        return _xi_scalar(a * v ** gamma, 1.0, gamma)[0] ** (-alpha)

    kw = dict(epsabs=1e-14, epsrel=1e-12, limit=200)
    head, _ = integrate.quad(inner, 0.0, 1.0, **kw)
    if alpha == 2:
        tail, _ = integrate.quad(outer, 0.0, 1.0, **kw)
    else:
        tail, _ = integrate.quad(outer, 0.0, 1.0, weight="alg", wvar=(alpha - 2.0, 0.0), **kw)
    return head + tail


def beta_function(p: float, q: float) -> float:
    """Beta function ``B(p, q)`` through the log-gamma function.

    Raises
    ------
    DomainError
        If ``p <= 0`` or ``q <= 0``.
    """
    if not (p > 0 and q > 0):
        raise DomainError(f"beta function needs positive arguments, got ({p!r}, {q!r})")
    return float(np.exp(special.betaln(p, q)))
