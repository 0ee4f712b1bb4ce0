"""Limit law of the rescaled path, jump time and jump size given a large maximum.

For ``mu = -1`` the limit is described by

* ``tau`` with density ``rho_gamma(u)**(-alpha) / I`` on ``[0, inf)``, with
  ``I = int_0^inf rho_gamma**(-alpha)``;
* ``Y`` Pareto(alpha) on ``[1, inf)``, independent of ``tau``;
* ``S(lam) = (-lam**gamma + 1{lam >= tau} gamma (lam-tau)**(gamma-1) R) / Gamma(1+gamma)``
  with ``R = rho_gamma(tau) Y``.

Its functionals are the maximum ``M``, the first passage ``N`` above 1 and
the argmax ``L``. For ``lam > tau`` the sign of ``S'`` is that of
``phi(lam) = log((gamma-1) R) + (gamma-2) log(lam-tau) - (gamma-1) log(lam)``,
so ``L`` is the largest root of ``phi``.

A general mean ``mu < 0`` is obtained from the ``mu = -1`` triple by
``tau -> c**(-1/gamma) tau``, ``S -> S(c**(1/gamma) .)``, ``N, L -> c**(-1/gamma) N, L``
and a jump of size ``c**(1-1/gamma) R``, where ``c = -mu``. ``M`` is unchanged.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, interpolate, special

from .errors import DomainError, RegimeError
from .mc import CounterRNG
from .rho import rho_integral, rho_values, xi0_at_one

__all__ = [
    "TauTable", "tau_table", "LimitTriple", "LimitSample", "sample_limit",
    "make_triple", "path_value", "functionals", "joint_cdf",
]

GRID_NODES = 2048
SAFEGUARD_POINTS = 1024
_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)
_TANGENT = 1e-12


def _check(gamma, alpha=None, mu=None):
    if not gamma >= 1:
        raise RegimeError(f"the limit triple needs gamma >= 1 (got {gamma!r})")
    if alpha is not None and not alpha > 1:
        raise DomainError("alpha must exceed 1")
    if mu is not None and not mu < 0:
        raise DomainError("mu must be negative")


class TauTable:
    """CDF and quantile function of the jump time for ``mu = -1``.

    The CDF is tabulated on ``GRID_NODES`` log-spaced nodes by 8-point
    Gauss-Legendre cells and interpolated by cubic Hermite splines that use
    the exact density as derivative. Past the last node the tail
    ``rho(u) ~ xi_0(1) u`` gives ``P{tau > u}`` proportional to ``u**(1-alpha)``.
    """

    def __init__(self, gamma: float, alpha: float, nodes: int = GRID_NODES):
        _check(gamma, alpha)
        self.gamma = float(gamma)
        self.alpha = float(alpha)
        self.total = rho_integral(gamma, alpha)
        slope = xi0_at_one(gamma)
        # tail mass below 1e-9 at the last node
        u_max = ((1e-9 * self.total * (alpha - 1.0)) ** (1.0 / (1.0 - alpha))) / slope
        u_max = float(min(max(u_max, 10.0), 1e12))
        self._build(nodes, u_max)
        if self.self_test() > 1e-7:
            self._build(4 * nodes, u_max)

    def density(self, u):
        return rho_values(self.gamma, u) ** (-self.alpha) / self.total

    def _build(self, nodes, u_max):
        u = np.concatenate([[0.0], np.geomspace(1e-4, u_max, nodes - 1)])
        lo, hi = u[:-1], u[1:]
        half = 0.5 * (hi - lo)
        pts = (0.5 * (hi + lo))[:, None] + half[:, None] * _GL_X[None, :]
        cell = half * (self.density(pts) @ _GL_W)
        cdf = np.concatenate([[0.0], np.cumsum(cell)])
        self.nodes = u
        self.u_max = u_max
        self.head_mass = float(cdf[-1])
        self.tail_mass = max(1.0 - self.head_mass, 0.0)
        dens = self.density(u)
        self._cdf = interpolate.CubicHermiteSpline(u, cdf, dens)
        self._ppf = interpolate.CubicHermiteSpline(cdf, u, 1.0 / dens)

    def cdf(self, u):
        u = np.asarray(u, dtype=float)
        inside = np.clip(u, 0.0, self.u_max)
        out = self._cdf(inside)
        tail = 1.0 - self.tail_mass * (np.maximum(u, self.u_max) / self.u_max) ** (1.0 - self.alpha)
        out = np.where(u > self.u_max, tail, out)
        out = np.where(u < 0, 0.0, out)
        return float(out) if out.ndim == 0 else out

    def ppf(self, w):
        w = np.asarray(w, dtype=float)
        inside = self._ppf(np.clip(w, 0.0, self.head_mass))
        with np.errstate(divide="ignore"):
            tail = self.u_max * (np.maximum(1.0 - w, 1e-300) / max(self.tail_mass, 1e-300)) ** (
                1.0 / (1.0 - self.alpha))
        out = np.where(w > self.head_mass, tail, np.maximum(inside, 0.0))
        return float(out) if out.ndim == 0 else out

    def self_test(self) -> float:
        """Largest CDF error at a few probes against direct quadrature."""
        probes = np.array([0.05, 0.3, 1.0, 2.5, 7.0, 30.0])
        err = 0.0
        for p in probes[probes < self.u_max]:
            direct, _ = integrate.quad(lambda v: float(self.density(v)), 0.0, p,
                                       epsabs=1e-13, epsrel=1e-11, limit=200)
            err = max(err, abs(direct - float(self.cdf(p))))
        return err


@lru_cache(maxsize=32)
def tau_table(gamma: float, alpha: float) -> TauTable:
    """Shared immutable :class:`TauTable` for ``(gamma, alpha)``."""
    return TauTable(float(gamma), float(alpha))


# ----------------------------------------------------------------------
# functionals
# ----------------------------------------------------------------------
def _path(gamma, tau, R, lam):
    lam = np.asarray(lam, dtype=float)
    delta = np.maximum(lam - tau, 0.0)
    if gamma == 1:
        jump = np.where(lam >= tau, R, 0.0)
    else:
        jump = np.where(lam >= tau, gamma * delta ** (gamma - 1.0) * R, 0.0)
    return (-lam ** gamma + jump) / special.gamma(1.0 + gamma)


def _phi(gamma, tau, R, lam):
    with np.errstate(divide="ignore"):
        return (np.log((gamma - 1.0) * R) + (gamma - 2.0) * np.log(lam - tau)
                - (gamma - 1.0) * np.log(lam))


def _bisect(f, lo, hi, increasing, iters=200):
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        done = (mid <= lo) | (mid >= hi)
        if np.all(done):
            break
        up = f(mid) > 0
        if not increasing:
            up = ~up
        hi = np.where(up & ~done, mid, hi)
        lo = np.where(~up & ~done, mid, lo)
    return lo, hi


def _functionals_base(gamma, tau, Y):
    """``(M, N, L)`` for ``mu = -1`` with arrays ``tau`` and ``Y``."""
    tau = np.asarray(tau, dtype=float)
    Y = np.asarray(Y, dtype=float)
    R = rho_values(gamma, tau) * Y
    if gamma == 1:
        M = -tau + R
        return M, tau.copy(), tau.copy()
    if gamma == 2:
        L = R.copy()
    else:
        lower = np.maximum(tau, (gamma - 1.0) * tau) if gamma > 2 else tau
        upper = tau + (gamma - 1.0) * R + 1.0
        phi = lambda lam, t=tau, r=R: _phi(gamma, t, r, lam)
        lo, hi = _bisect(phi, lower, upper, increasing=False)
        L = np.where(_path(gamma, tau, R, hi) > _path(gamma, tau, R, lo), hi, lo)
    M = _path(gamma, tau, R, L)
    # safeguard grid on [tau, L_ub], log-spaced past tau
    span = (tau + (gamma - 1.0) * R + 1.0) - tau
    offs = np.geomspace(1e-9, 1.0, SAFEGUARD_POINTS)
    for start in range(0, tau.size, 4096):
        sl = slice(start, start + 4096)
        lam = tau[sl, None] + span[sl, None] * offs[None, :]
        grid = _path(gamma, tau[sl, None], R[sl, None], lam)
        k = np.argmax(grid, axis=1)
        best = grid[np.arange(k.size), k]
        better = best > M[sl] + 1e-12 * np.maximum(1.0, np.abs(M[sl]))
        M[sl] = np.where(better, best, M[sl])
        L[sl] = np.where(better, lam[np.arange(k.size), k], L[sl])
    # first passage on the increasing segment ending at L
    if gamma > 2:
        phi = lambda lam, t=tau, r=R: _phi(gamma, t, r, lam)
        vertex = (gamma - 1.0) * tau
        r1_lo, r1_hi = _bisect(phi, tau, np.maximum(vertex, tau), increasing=True)
        start = np.where(_phi(gamma, tau, R, np.maximum(vertex, tau + 1e-300)) > 0, r1_hi, tau)
        start = np.where(tau == 0, 0.0, start)
    else:
        start = tau
    level = lambda lam, t=tau, r=R: _path(gamma, t, r, lam) - 1.0
    n_lo, n_hi = _bisect(level, start, np.maximum(L, start), increasing=True)
    N = np.where(M - 1.0 <= _TANGENT, L, n_hi)
    return M, N, L


@dataclass(frozen=True)
class LimitTriple:
    """One draw of the limit triple with its functionals.

    ``tau`` is the rescaled jump time, ``Y`` the Pareto variable and
    ``rho_tau = rho_gamma(tau_base)`` with ``tau_base = (-mu)**(1/gamma) tau``
    (equal to ``tau`` when ``mu = -1``). ``jump`` is ``(-mu)**(1-1/gamma) rho_tau Y``.
    """

    gamma: float
    mu: float
    tau: float
    Y: float
    rho_tau: float
    M_lim: float
    N_lim: float
    L_lim: float

    @property
    def scale(self) -> float:
        return (-self.mu) ** (1.0 / self.gamma)

    @property
    def tau_base(self) -> float:
        return self.scale * self.tau

    @property
    def jump(self) -> float:
        return (-self.mu) ** (1.0 - 1.0 / self.gamma) * self.rho_tau * self.Y

    def path(self, lam):
        """Evaluate the limit path at ``lam >= 0``."""
        return path_value(self, lam)


@dataclass
class LimitSample:
    """Arrays of sampled triples."""

    gamma: float
    alpha: float
    mu: float
    tau: np.ndarray
    Y: np.ndarray
    rho_tau: np.ndarray
    M_lim: np.ndarray
    N_lim: np.ndarray
    L_lim: np.ndarray

    def __len__(self):
        return self.tau.size

    def triple(self, i: int) -> LimitTriple:
        return LimitTriple(self.gamma, self.mu, float(self.tau[i]), float(self.Y[i]),
                           float(self.rho_tau[i]), float(self.M_lim[i]),
                           float(self.N_lim[i]), float(self.L_lim[i]))

    def paths(self, lam, rows=None) -> np.ndarray:
        """Paths on the grid ``lam``, one row per selected draw."""
        rows = np.arange(len(self)) if rows is None else np.asarray(rows)
        s = (-self.mu) ** (1.0 / self.gamma)
        lam = np.asarray(lam, dtype=float)
        R = self.rho_tau[rows] * self.Y[rows]
        return _path(self.gamma, (s * self.tau[rows])[:, None], R[:, None], s * lam[None, :])


def _assemble(gamma, alpha, mu, tau_base, Y):
    s = (-mu) ** (1.0 / gamma)
    M, N, L = _functionals_base(gamma, tau_base, Y)
    return LimitSample(gamma, alpha, mu, tau_base / s, np.asarray(Y, dtype=float),
                       rho_values(gamma, tau_base), M, N / s, L / s)


def sample_limit(gamma: float, alpha: float, mu: float = -1.0, seed: int = 0,
                 draws: int = 1) -> LimitSample:
    """Draw ``draws`` independent limit triples.

    ``tau`` and ``Y`` are obtained by inversion from consecutive uniforms of
    replicate 0 of a counter-based stream keyed by ``seed``.
    """
    _check(gamma, alpha, mu)
    if draws < 1:
        raise DomainError("draws must be at least 1")
    u = CounterRNG(seed).uniforms(2 * int(draws))
    tau_base = tau_table(float(gamma), float(alpha)).ppf(u[0::2])
    Y = (1.0 - u[1::2]) ** (-1.0 / alpha)
    return _assemble(float(gamma), float(alpha), float(mu), np.atleast_1d(tau_base), Y)


def make_triple(gamma: float, tau: float, Y: float, mu: float = -1.0) -> LimitTriple:
    """Triple with prescribed ``tau`` (already rescaled) and ``Y``."""
    _check(gamma, mu=mu)
    if not Y >= 1:
        raise DomainError("Y must be at least 1")
    if not tau >= 0:
        raise DomainError("tau must be nonnegative")
    s = (-mu) ** (1.0 / gamma)
    return _assemble(float(gamma), math.nan, float(mu), np.array([s * tau]), np.array([Y])).triple(0)


def path_value(triple: LimitTriple, lam):
    """Value of the limit path of ``triple`` at ``lam >= 0``.

    For ``1 < gamma < 2`` the right derivative at ``tau`` is infinite.
    """
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise DomainError("lambda must be nonnegative")
    s = triple.scale
    out = _path(triple.gamma, triple.tau_base, triple.rho_tau * triple.Y, s * lam)
    return float(out) if out.ndim == 0 else out


def functionals(triple: LimitTriple):
    """Return ``(M, N, L)`` of ``triple``."""
    return triple.M_lim, triple.N_lim, triple.L_lim


def l_equation_residual(triple: LimitTriple) -> float:
    """``-L**(gamma-1) + (gamma-1)(L-tau)**(gamma-2) R`` at the returned argmax (``mu = -1`` units)."""
    g = triple.gamma
    L = triple.scale * triple.L_lim
    R = triple.rho_tau * triple.Y
    return -L ** (g - 1.0) + (g - 1.0) * (L - triple.tau_base) ** (g - 2.0) * R


def joint_cdf(gamma: float, alpha: float, u: float, y: float) -> float:
    """``P{tau <= u, rho(tau) Y > y} = int_0^u max(y, rho(v))**(-alpha) dv / I`` for ``mu = -1``."""
    _check(gamma, alpha)
    total = rho_integral(gamma, alpha)
    f = lambda v: max(y, float(rho_values(gamma, v))) ** (-alpha)
    val, _ = integrate.quad(f, 0.0, u, epsabs=1e-13, epsrel=1e-10, limit=200)
    return val / total
