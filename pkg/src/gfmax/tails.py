"""Closed-form tail asymptotes of the maximum of a (g,F)-process.

Every evaluator has the shape ``constant * r(t)`` where ``r`` combines the
scale function ``U`` of the sequence with the Pareto tail
``Fbar(t) = c_F t**(-alpha)`` of the innovations:

==================== ================================ =====================
regime               constant                         r(t)
==================== ================================ =====================
VanishingG           g*^a/gam B(1/gam, a-1/gam)       U(t) Fbar(t)
                     (Gamma(1+gam)/-mu)^(1/gam)
SignedVanishingG     as above times                   U(t) Fbar(t)
                     (g*^a + (q/p)(-g_*)^a)/g*^a
DivergingG           (-mu)^(a(1-1/gam)-1/gam)         U(t) Fbar(U(t))
                     int rho_gam^-a
FiniteLimitG         g*^a / ((-mu) g_inf (a-1))       t Fbar(t)
ClassicalVeraverbeke 1 / ((-mu)(a-1))                 t Fbar(t)
==================== ================================ =====================
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from scipy import integrate, optimize, special

from .errors import DomainError, InvalidSpecError, RegimeError
from .gseq import Farima, GExtremes, GSequence
from .rho import beta_function, rho_integral

__all__ = [
    "InnovationSpec", "Regime", "RateDescriptor", "TailAsymptote",
    "asymptote", "asymptote_vanishing", "asymptote_diverging",
    "asymptote_finite_limit", "asymptote_signed", "asymptote_classical",
    "quantile_of_max", "normalized_quantile", "KaramataB", "KaramataResult",
    "karamata_integral", "truncated_mgf_bound", "fractional_integrated_tail",
    "innovation_from_dict", "innovation_to_dict",
]

EXTREMES_HORIZON = 100_000


@dataclass(frozen=True)
class InnovationSpec:
    """Innovation law with a pure Pareto right tail.

    Attributes
    ----------
    alpha : float
        Tail index, ``alpha > 1``.
    mu : float
        Mean, ``mu < 0``.
    tail_scale : float
        ``c_F`` in ``P{X > t} ~ c_F t**(-alpha)``.
    balance : tuple of float
        ``(p, q)`` with ``p > 0``, ``q >= 0`` and ``p + q = 1``. The left tail
        is ``P{X < -t} ~ (q/p) c_F t**(-alpha)``.
    degenerate : bool
        If True the innovations are the constant ``mu``; only the samplers
        honour this flag.
    """

    alpha: float
    mu: float
    tail_scale: float = 1.0
    balance: tuple = (1.0, 0.0)
    degenerate: bool = False

    def __post_init__(self):
        if not self.alpha > 1:
            raise InvalidSpecError(f"innovation.alpha must exceed 1, got {self.alpha!r}")
        if not self.mu < 0:
            raise InvalidSpecError(f"innovation.mu must be negative, got {self.mu!r}")
        if not self.tail_scale > 0:
            raise InvalidSpecError("innovation.tail_scale must be positive")
        if len(self.balance) != 2:
            raise InvalidSpecError("innovation.balance must be a pair (p, q)")
        p, q = self.balance
        if not (p > 0 and q >= 0 and abs(p + q - 1.0) <= 1e-12):
            raise InvalidSpecError("innovation.balance needs p > 0, q >= 0, p + q = 1")
        object.__setattr__(self, "balance", (float(p), float(q)))

    @classmethod
    def constant(cls, mu: float, alpha: float = 2.0) -> "InnovationSpec":
        """Degenerate law ``X = mu`` almost surely."""
        return cls(alpha=alpha, mu=mu, degenerate=True)

    @property
    def p(self):
        return self.balance[0]

    @property
    def q(self):
        return self.balance[1]

    @property
    def pareto_scale(self) -> float:
        """Scale ``s = (c_F/p)**(1/alpha)`` of both Pareto branches of the sampler."""
        return (self.tail_scale / self.p) ** (1.0 / self.alpha)

    def tail(self, t):
        """Asymptotic right tail ``c_F t**(-alpha)``."""
        return self.tail_scale * np.power(np.asarray(t, dtype=float), -self.alpha)


class Regime(str, Enum):
    VANISHING = "VanishingG"
    DIVERGING = "DivergingG"
    FINITE_LIMIT = "FiniteLimitG"
    SIGNED = "SignedVanishingG"
    CLASSICAL = "ClassicalVeraverbeke"


@dataclass(frozen=True)
class RateDescriptor:
    """Jump scale ``chi``, time scale and the symbolic form of ``r(t)``."""

    jump_scale: str
    time_scale: str
    composition: str


@dataclass(frozen=True)
class TailAsymptote:
    """Asymptotic evaluator ``t -> constant * r(t)`` for ``P{M > t}``.

    Attributes
    ----------
    regime : Regime
    constant : float
    rate_descriptor : RateDescriptor
    validity : str
        ``"valid"`` or ``"conditionally valid"``.
    parts : dict
        Named factors of ``constant``.
    """

    regime: Regime
    constant: float
    rate_descriptor: RateDescriptor
    innov: InnovationSpec
    seq: Optional[GSequence] = None
    u_mode: Optional[str] = None
    validity: str = "valid"
    parts: dict = field(default_factory=dict)

    def U(self, t):
        if self.seq is None:
            return np.asarray(t, dtype=float)
        return np.asarray(self.seq.scale_U(t, self.u_mode), dtype=float)

    def evaluate(self, t):
        """Evaluate the asymptote at ``t`` (scalar or array)."""
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr <= 0):
            raise DomainError("tail asymptotes need t > 0")
        alpha = self.innov.alpha
        c_f = self.innov.tail_scale
        if self.regime in (Regime.VANISHING, Regime.SIGNED):
            out = self.constant * self.U(t_arr) * c_f * t_arr ** (-alpha)
        elif self.regime is Regime.DIVERGING:
            out = self.constant * c_f * self.U(t_arr) ** (1.0 - alpha)
        else:
            out = self.constant * c_f * t_arr ** (1.0 - alpha)
        return float(out) if np.ndim(out) == 0 else out

    def decay_index(self) -> float:
        """Index ``theta`` with ``evaluate(2t)/evaluate(t) -> 2**(-theta)``."""
        a = self.innov.alpha
        gam = self.seq.gamma if self.seq is not None else 1.0
        if self.regime in (Regime.VANISHING, Regime.SIGNED):
            return a - 1.0 / gam
        if self.regime is Regime.DIVERGING:
            return (a - 1.0) / gam
        return a - 1.0

    def formula(self) -> str:
        return f"{self.constant!r} * {self.rate_descriptor.composition}"


def _extremes(seq):
    return seq.extremes(EXTREMES_HORIZON)


def _default_mode(seq):
    return "asymptotic" if isinstance(seq.kind, Farima) else "exact"


def _vanishing_base(gam, alpha, mu):
    return (1.0 / gam) * beta_function(1.0 / gam, alpha - 1.0 / gam) * (
        special.gamma(1.0 + gam) / (-mu)) ** (1.0 / gam)


def _check_vanishing(seq, innov):
    gam = seq.gamma
    alpha = innov.alpha
    if seq.limit_behavior != "zero":
        raise RegimeError(f"VanishingG needs g_n -> 0; sequence has limit behavior "
                          f"{seq.limit_behavior!r}")
    if not gam < 1:
        raise RegimeError(f"VanishingG needs gamma < 1, got {gam!r}")
    if not gam > 1.0 / alpha:
        raise RegimeError(f"VanishingG needs gamma > 1/alpha: {gam!r} <= 1/{alpha!r}")


def asymptote_vanishing(seq: GSequence, innov: InnovationSpec) -> TailAsymptote:
    """Asymptote for nonnegative coefficients tending to zero, ``1/alpha < gamma < 1``.

    Raises
    ------
    RegimeError
        Naming the violated condition.
    """
    _check_vanishing(seq, innov)
    ext = _extremes(seq)
    if ext.g_lower < 0:
        raise RegimeError("VanishingG needs nonnegative coefficients; use asymptote_signed")
    gam, alpha = seq.gamma, innov.alpha
    base = _vanishing_base(gam, alpha, innov.mu)
    const = ext.g_star ** alpha * base
    return TailAsymptote(
        Regime.VANISHING, const,
        RateDescriptor("Identity", "U", "U(t)*Fbar(t)"), innov, seq, _default_mode(seq),
        parts={"g_star": ext.g_star, "base": base,
               "beta": beta_function(1.0 / gam, alpha - 1.0 / gam)})


def asymptote_signed(seq: GSequence, innov: InnovationSpec) -> TailAsymptote:
    """Asymptote for finitely many negative coefficients, ``1/alpha < gamma < 1``.

    With ``Fbar ~ c_F t**(-alpha)`` and ``F(-t) ~ (q/p) c_F t**(-alpha)`` the
    constant is ``base * (g*^alpha + (q/p) (-g_*)^alpha)``.
    """
    _check_vanishing(seq, innov)
    ext = _extremes(seq)
    gam, alpha = seq.gamma, innov.alpha
    base = _vanishing_base(gam, alpha, innov.mu)
    weight = ext.g_star ** alpha + (innov.q / innov.p) * (-ext.g_lower) ** alpha
    return TailAsymptote(
        Regime.SIGNED, base * weight,
        RateDescriptor("Identity", "U", "U(t)*(g*^a*Fbar(t) + (-g_*)^a*F(-t))"),
        innov, seq, _default_mode(seq),
        parts={"g_star": ext.g_star, "g_lower": ext.g_lower, "base": base,
               "normalization": "Fbar ~ c_F t^-a, F(-t) ~ (q/p) c_F t^-a"})


def asymptote_diverging(seq: GSequence, innov: InnovationSpec) -> TailAsymptote:
    """Asymptote for coefficients tending to infinity, ``gamma >= 1``.

    For ``gamma = 1`` only the log-power family is certified; any other
    sequence is labelled ``"conditionally valid"``.
    """
    gam, alpha = seq.gamma, innov.alpha
    if seq.limit_behavior != "infinite":
        raise RegimeError(f"DivergingG needs g_n -> infinity; sequence has limit behavior "
                          f"{seq.limit_behavior!r}")
    if not gam >= 1:
        raise RegimeError(f"DivergingG needs gamma >= 1, got {gam!r}")
    validity = "valid"
    if gam == 1 and not seq.is_log_power:
        validity = "conditionally valid"
    integral = rho_integral(gam, alpha)
    mu_factor = (-innov.mu) ** (alpha * (1.0 - 1.0 / gam) - 1.0 / gam)
    return TailAsymptote(
        Regime.DIVERGING, mu_factor * integral,
        RateDescriptor("U", "U", "(Id*Fbar)(U(t))"), innov, seq, _default_mode(seq),
        validity=validity, parts={"mu_factor": mu_factor, "rho_integral": integral})


def asymptote_finite_limit(seq: GSequence, innov: InnovationSpec) -> TailAsymptote:
    """Asymptote for coefficients with a finite positive limit ``g_inf``."""
    if seq.limit_behavior != "finite":
        raise RegimeError(f"FiniteLimitG needs a finite positive limit; sequence has "
                          f"limit behavior {seq.limit_behavior!r}")
    g_inf = seq.g_infinity
    if not (g_inf is not None and g_inf > 0):
        raise RegimeError("FiniteLimitG needs g_inf > 0")
    alpha = innov.alpha
    ext = _extremes(seq)
    const = ext.g_star ** alpha / ((-innov.mu) * g_inf * (alpha - 1.0))
    return TailAsymptote(
        Regime.FINITE_LIMIT, const,
        RateDescriptor("Identity", "Id", "t*Fbar(t)"), innov, seq, None,
        parts={"g_star": ext.g_star, "g_infinity": g_inf})


def asymptote_classical(innov: InnovationSpec) -> TailAsymptote:
    """Random-walk asymptote ``t Fbar(t) / ((-mu)(alpha-1))``."""
    const = 1.0 / ((-innov.mu) * (innov.alpha - 1.0))
    return TailAsymptote(Regime.CLASSICAL, const,
                         RateDescriptor("Identity", "Id", "t*Fbar(t)"), innov)


def asymptote(seq: GSequence, innov: InnovationSpec) -> TailAsymptote:
    """Dispatch to the evaluator matching the sequence's limit behavior."""
    behavior = seq.limit_behavior
    if behavior == "zero":
        if _extremes(seq).g_lower < 0:
            return asymptote_signed(seq, innov)
        return asymptote_vanishing(seq, innov)
    if behavior == "infinite":
        return asymptote_diverging(seq, innov)
    return asymptote_finite_limit(seq, innov)


# ----------------------------------------------------------------------
# quantiles
# ----------------------------------------------------------------------
def quantile_of_max(asym: TailAsymptote, s: float) -> float:
    """Asymptotic ``1 - 1/s`` quantile of the maximum.

    Solves ``evaluate(q) = 1/s``, bracketing on a decade grid in ``log q``.

    Raises
    ------
    RegimeError
        Unless the asymptote is of the DivergingG regime.
    DomainError
        If ``s <= 1`` or ``s`` is not finite.
    """
    if asym.regime is not Regime.DIVERGING:
        raise RegimeError("quantile_of_max is defined for the DivergingG regime only")
    if not (s > 1 and math.isfinite(s)):
        raise DomainError(f"quantile level s must be finite and > 1, got {s!r}")
    target = math.log(1.0 / s)

    def h(logq):
        return math.log(asym.evaluate(math.exp(logq))) - target

    # exact U is defined only above g_0
    floor = float(asym.seq.coefficients(1)[0]) if asym.u_mode == "exact" else 0.0
    lo = math.log(max(floor, 1e-300) * (1.0 + 1e-9)) if floor > 0 else -700.0
    if h(lo) < 0:
        raise DomainError(f"level s={s!r} falls below the range where the asymptote is defined")
    hi = lo + math.log(10.0)
    while h(hi) > 0:
        lo, hi = hi, hi + math.log(10.0)
    return math.exp(optimize.brentq(h, lo, hi, xtol=1e-14, rtol=1e-15, maxiter=500))


def normalized_quantile(asym: TailAsymptote, s: float) -> float:
    """Quantile of ``M`` divided by ``constant**(gamma/(alpha-1))``."""
    gam = asym.seq.gamma
    return asym.constant ** (-gam / (asym.innov.alpha - 1.0)) * quantile_of_max(asym, s)


# ----------------------------------------------------------------------
# Karamata-type integral
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class KaramataB:
    """Shift function ``b(u) = scale * u**beta``."""

    beta: float
    scale: float = 1.0

    def inverse(self, t):
        return (t / self.scale) ** (1.0 / self.beta)


@dataclass(frozen=True)
class KaramataResult:
    numeric: float
    asymptotic: float

    @property
    def ratio(self):
        return self.numeric / self.asymptotic


def karamata_integral(b: KaramataB, innov: InnovationSpec, t: float, r: float = 0.0) -> KaramataResult:
    """Compare ``int_r^inf Fbar(t + b(u)) du`` with its asymptotic equivalent.

    The asymptotic side is ``(1/beta) B(1/beta, alpha - 1/beta) b^{-1}(t) Fbar(t)``.

    Raises
    ------
    DomainError
        If ``alpha * beta <= 1`` (the integral diverges) or ``alpha <= 1``.
    """
    alpha, beta = innov.alpha, b.beta
    if not beta > 0:
        raise DomainError("beta must be positive")
    if alpha * beta <= 1:
        raise DomainError(f"integral diverges: alpha*beta = {alpha * beta!r} <= 1")
    if not t > 0 or r < 0:
        raise DomainError("need t > 0 and r >= 0")
    c_f = innov.tail_scale

    def f(u):
        return c_f * (t + b.scale * u ** beta) ** (-alpha)

    split = max(r, b.inverse(t))
    kw = dict(epsabs=0.0, epsrel=1e-11, limit=400)
    head = integrate.quad(f, r, split, **kw)[0] if split > r else 0.0
    tail = integrate.quad(f, split, np.inf, **kw)[0]
    asym = (1.0 / beta) * beta_function(1.0 / beta, alpha - 1.0 / beta) * b.inverse(t) * c_f * t ** (-alpha)
    return KaramataResult(head + tail, asym)


def fractional_integrated_tail(innov: InnovationSpec, order: float, t: float) -> float:
    """``int_t^inf (x-t)**(order-1) Fbar(x) dx`` for the Pareto tail, by quadrature."""
    alpha = innov.alpha
    if not (order > 0 and alpha > order):
        raise DomainError("need 0 < order < alpha")
    c_f = innov.tail_scale
    # x = t / w maps [t, inf) onto (0, 1]
    val, _ = integrate.quad(lambda w: c_f, 0.0, 1.0, weight="alg",
                            wvar=(alpha - order - 1.0, order - 1.0),
                            epsabs=0.0, epsrel=1e-12)
    return val * t ** (order - alpha)


# ----------------------------------------------------------------------
# truncated MGF bound
# ----------------------------------------------------------------------
def truncated_mgf_bound(H, lam: float, a: float, eta: float) -> float:
    """Upper bound on ``log E exp(lam Z 1{Z <= a})`` for a centered ``Z``.

    ``eta lam E|Z| - lam E[Z 1{lam Z <= log(1-eta)}] + exp(lam a) P{Z > log(1+eta)/lam}``.

    Parameters
    ----------
    H : array_like or scipy.stats frozen distribution
        Empirical sample or parametric law of ``Z``.
    lam, a : float
        Positive.
    eta : float
        In ``(0, 1)``.
    """
    if not 0 < eta < 1:
        raise DomainError(f"eta must lie in (0, 1), got {eta!r}")
    if not (lam > 0 and a > 0):
        raise DomainError("lambda and a must be positive")
    lower = math.log(1.0 - eta) / lam
    upper = math.log(1.0 + eta) / lam
    if hasattr(H, "expect") and hasattr(H, "sf"):
        abs_mean = H.expect(lambda z: abs(z))
        trunc = H.expect(lambda z: z, ub=lower)
        sf = H.sf(upper)
    else:
        z = np.asarray(H, dtype=float)
        abs_mean = float(np.mean(np.abs(z)))
        trunc = float(np.mean(np.where(z <= lower, z, 0.0)))
        sf = float(np.mean(z > upper))
    return float(eta * lam * abs_mean - lam * trunc + math.exp(lam * a) * sf)


# ----------------------------------------------------------------------
# JSON
# ----------------------------------------------------------------------
_INNOV_FIELDS = {"alpha", "mu", "tail_scale", "balance", "degenerate", "schema_version"}


def innovation_from_dict(obj: dict) -> InnovationSpec:
    """Build an :class:`InnovationSpec` from ``{"alpha", "mu", "tail_scale", "balance"}``."""
    if not isinstance(obj, dict):
        raise InvalidSpecError("innovation spec must be a JSON object")
    unknown = set(obj) - _INNOV_FIELDS
    if unknown:
        raise InvalidSpecError(f"innovation: unknown field(s) {sorted(unknown)}")
    try:
        return InnovationSpec(
            alpha=float(obj["alpha"]), mu=float(obj["mu"]),
            tail_scale=float(obj.get("tail_scale", 1.0)),
            balance=tuple(float(v) for v in obj.get("balance", (1.0, 0.0))),
            degenerate=bool(obj.get("degenerate", False)))
    except KeyError as exc:
        raise InvalidSpecError(f"innovation: missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InvalidSpecError):
            raise
        raise InvalidSpecError(f"innovation: {exc}") from None


def innovation_to_dict(innov: InnovationSpec) -> dict:
    return {"alpha": innov.alpha, "mu": innov.mu, "tail_scale": innov.tail_scale,
            "balance": list(innov.balance), "degenerate": innov.degenerate}
