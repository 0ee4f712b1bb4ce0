"""Variational envelopes of the conditional-mean paths and their inverses.

With ``G(m) = g_{[0,m)}``,

* ``Psi_n(x) = max(0, max_k (g_k x - G(n+k)))``,
* ``Psi_n^{-1}(t) = min_{k : g_k > 0} (t + G(n+k)) / g_k``,
* ``psi_{i,n}(x) = -G(i)`` for ``i < n`` and ``(x+1) g_{i-n} - G(i)`` otherwise,
* ``psi_n(x) = max_{i >= 1} psi_{i,n}(x)``.

All profiles use the normalization ``E X = -1``.

Searches over ``k`` run on doubling windows. The ratio ``G(n+k)/g_k`` is a
lower bound of every objective and grows like ``k/gamma`` for large ``k``,
but for ``gamma > 2`` it first decreases up to ``k`` of order
``(gamma-1) n``. A search stops once this bound is nondecreasing and above
the incumbent on two consecutive windows.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError
from .gseq import GExtremes, GSequence

__all__ = [
    "PsiContext", "PsiInverseResult", "make_context", "psi_forward",
    "psi_inverse", "psi_conditional", "psi_envelope", "lln_residual",
    "vanishing_closed_form",
]

_FIRST_WINDOW = 64


@dataclass
class PsiContext:
    """Prepared sequence with its extremes and the threshold ``t1``.

    Attributes
    ----------
    seq : GSequence
    extremes : GExtremes
    mu : float
        Innovation mean, negative.
    t1 : float
        ``max(0, max_{i >= 1} -G(i))``; above it ``psi_n(x) = Psi_n(x+1)``.
    """

    seq: GSequence
    extremes: GExtremes
    mu: float
    t1: float

    def check_n(self, n):
        if n < self.extremes.n0:
            raise DomainError(f"n={n} is below n0={self.extremes.n0}")


@dataclass(frozen=True)
class PsiInverseResult:
    """Value of ``Psi_n^{-1}(t)``, smallest minimizing ``k`` and scan cutoff."""

    value: float
    k_index: int
    scan_bound: int


def make_context(seq: GSequence, mu: float = -1.0, search_horizon: int = 100_000) -> PsiContext:
    """Build a :class:`PsiContext` for ``seq``."""
    if not mu < 0:
        raise DomainError("mu must be negative")
    ext = seq.extremes(search_horizon)
    horizon = max(search_horizon, ext.n0 + 1)
    prefix = seq.prefix_array(horizon)
    t1 = max(0.0, float(np.max(-prefix[1:]))) if horizon >= 1 else 0.0
    return PsiContext(seq, ext, float(mu), t1)


def _arrays(seq, n, end):
    seq.prepare(n + end)
    return seq._g, seq._prefix


def _window(seq, n, start, end):
    g, prefix = _arrays(seq, n, end)
    return g[start:end], prefix[n + start:n + end].astype(float)


def _settled(lb, level):
    if not (np.all(np.isfinite(lb)) and lb.min() > level):
        return False
    return bool(np.all(np.diff(lb) >= 0))


def psi_inverse(ctx: PsiContext, n: int, t: float) -> PsiInverseResult:
    """Evaluate ``Psi_n^{-1}(t)`` and the smallest minimizing index.

    Parameters
    ----------
    ctx : PsiContext
    n : int
        Time index, at least ``n0``.
    t : float
        Level, ``t >= 0``. At ``t = 0`` the value is ``x_n``, the right end
        of the interval where ``Psi_n`` vanishes.

    Raises
    ------
    DomainError
        If ``t < 0`` or ``n < n0``.
    """
    if not t >= 0:
        raise DomainError("psi_inverse needs t >= 0")
    ctx.check_n(n)
    seq = ctx.seq
    t = float(t)
    best = math.inf
    k_best = -1
    start = 0
    width = _FIRST_WINDOW
    streak = 0
    while True:
        end = start + width
        g, G = _window(seq, n, start, end)
        pos = g > 0
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            obj = np.where(pos, (t + G) / g, np.inf)
            lb = np.where(pos, G / g, np.inf)
        i = int(np.argmin(obj))
        if obj[i] < best:
            best = float(obj[i])
            k_best = start + i
        if best < math.inf and _settled(lb, best):
            streak += 1
        else:
            streak = 0
        if streak >= 2:
            return PsiInverseResult(best, k_best, end)
        start = end
        width *= 2


def psi_forward(ctx: PsiContext, n: int, x: float) -> float:
    """Evaluate ``Psi_n(x) = max(0, max_k (g_k x - G(n+k)))``.

    A window contributes nothing once ``G(n+k)/g_k > x`` on all of it; the
    scan stops after two such windows.
    """
    ctx.check_n(n)
    if not x >= 0:
        raise DomainError("psi_forward needs x >= 0")
    x = float(x)
    seq = ctx.seq
    best = 0.0
    start = 0
    width = _FIRST_WINDOW
    streak = 0
    while True:
        end = start + width
        g, G = _window(seq, n, start, end)
        obj = g * x - G
        best = max(best, float(obj.max()))
        pos = g > 0
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            lb = np.where(pos, G / g, np.inf)
        if _settled(lb, x):
            streak += 1
        else:
            streak = 0
        if streak >= 2:
            return best
        start = end
        width *= 2


def psi_conditional(ctx: PsiContext, i: int, n: int, x: float) -> float:
    """Evaluate ``psi_{i,n}(x)`` under the normalization ``E X = -1``."""
    if i < 0 or n < 0:
        raise DomainError("i and n must be nonnegative")
    seq = ctx.seq
    if i < n:
        return -seq.partial_sum(i)
    g = seq.coefficients(i - n + 1)[i - n]
    return (x + 1.0) * g - seq.partial_sum(i)


def _raw_envelope(ctx, n, z):
    """``max_k (z g_k - G(n+k))`` without the truncation at zero."""
    seq = ctx.seq
    g_star = ctx.extremes.g_star
    best = -math.inf
    start = 0
    width = _FIRST_WINDOW
    streak = 0
    while True:
        end = start + width
        g, G = _window(seq, n, start, end)
        obj = z * g - G
        wmax = float(obj.max())
        best = max(best, wmax)
        if math.isfinite(g_star):
            _, G_next = _window(seq, n, end, end + 1)
            if z * g_star - float(G_next[0]) < best:
                return best
        pos = g > 0
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            lb = np.where(pos, G / g, np.inf)
        if _settled(lb, z) and wmax < best:
            streak += 1
        else:
            streak = 0
        if streak >= 2:
            return best
        start = end
        width *= 2


def psi_envelope(ctx: PsiContext, n: int, x: float) -> float:
    """Evaluate ``psi_n(x) = max_{i >= 1} psi_{i,n}(x)``.

    Returns ``Psi_n(x+1)`` when it exceeds ``t1`` and a direct scan over
    ``i`` otherwise.
    """
    if n < 1:
        raise DomainError("psi_envelope needs n >= 1")
    if n >= ctx.extremes.n0:
        value = psi_forward(ctx, n, x + 1.0)
        if value > ctx.t1:
            return value
    before = -math.inf
    if n > 1:
        before = float(np.max(-ctx.seq.prefix_array(n - 1)[1:]))
    return max(before, _raw_envelope(ctx, n, x + 1.0))


def vanishing_closed_form(ctx: PsiContext, n: int):
    """Closed form of ``Psi_n^{-1}`` on ``[t0, inf)`` for a vanishing sequence.

    Returns
    -------
    t0 : float
        ``max(0, max_{k<k*} G[n+k, n+k*) g*/(g*-g_k) - G(n+k*))``.
    value : callable
        ``t -> (t + G(n+k*)) / g*``.
    """
    ext = ctx.extremes
    if ext.k_star is None:
        raise DomainError("the supremum of the sequence is not attained")
    k_star, g_star = ext.k_star, ext.g_star
    g, prefix = _arrays(ctx.seq, n, k_star + 1)
    G = prefix.astype(float)
    t0 = 0.0
    for k in range(k_star):
        if g[k] > 0:
            cand = float(prefix[n + k_star] - prefix[n + k]) * g_star / (g_star - g[k]) - G[n + k_star]
            t0 = max(t0, cand)
    G_star = G[n + k_star]
    return t0, (lambda t: (t + G_star) / g_star)


def lln_residual(ctx: PsiContext, n: int, sample_paths: int, rng_seed: int,
                 innov=None, workers: Optional[int] = None) -> float:
    """Monte Carlo estimate of ``P{|S_n / (mu G(n)) - 1| > 0.1}``.

    Parameters
    ----------
    innov : InnovationSpec, optional
        Defaults to a one-sided Pareto law with ``alpha = 2.5``, unit tail
        constant and mean ``ctx.mu``.
    """
    from .mc import simulate_endpoints
    from .tails import InnovationSpec

    if n < 1:
        raise DomainError("lln_residual needs n >= 1")
    if innov is None:
        innov = InnovationSpec(alpha=2.5, mu=ctx.mu, tail_scale=1.0)
    s_n = simulate_endpoints(ctx.seq, innov, n, sample_paths, rng_seed, workers=workers)
    mean = innov.mu * ctx.seq.partial_sum(n)
    return float(np.mean(np.abs(s_n / mean - 1.0) > 0.1))
