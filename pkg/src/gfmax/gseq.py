"""Coefficient sequences of analytic functions and their scale functions.

A sequence ``g_0, g_1, ...`` is described by one of four kinds:

* :class:`Farima` -- Taylor coefficients of ``(1-x)**(-d) * theta(x) / phi(x)``.
* :class:`PowerLaw` -- ``g_n = (n+1)**(gamma-1) * ell(n)`` with ``ell`` a
  constant or a power of ``log(n + e)``.
* :class:`ConstantOne` -- ``g_n = 1`` (the random walk).
* :class:`Custom` -- an explicit finite prefix followed by a closed-form tail.

:class:`GSequence` wraps a kind with a growable cache of coefficients and
prefix sums, and exposes the extremes, the scale function ``U`` solving
``g(1 - 1/U(t)) = t`` and Karamata convergence diagnostics.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy import optimize, special
from scipy.signal import lfilter

from .errors import DomainError, InvalidSpecError, ResourceError

__all__ = [
    "Farima", "Const", "LogPower", "PowerLaw", "ConstantOne", "PowerTail",
    "ShiftedLimitTail", "Custom", "GExtremes", "GSequence",
    "sequence_from_dict", "sequence_to_dict",
]

DEFAULT_CACHE_CAP = 10_000_000
_CHUNK = 1 << 16
# closed forms replace the power series from this u on
_POLYLOG_FROM = 64.0


def _polylog_near_one(order, m):
    """``Li_order(exp(m))`` for ``-2 pi < m < 0`` and ``order`` not a positive integer.

    Uses ``Gamma(1-order) (-m)**(order-1) + sum_k zeta(order-k) m**k / k!``.
    """
    total = special.gamma(1.0 - order) * (-m) ** (order - 1.0)
    term_scale = 1.0
    for k in range(400):
        term = special.zeta(order - k) * term_scale
        total += term
        if k > 2 and abs(term) <= 1e-17 * abs(total):
            break
        term_scale *= m / (k + 1)
    return float(total)


@dataclass(frozen=True)
class Farima:
    """``(1-x)**(-d) * theta(x) / phi(x)``, polynomials in ascending degree."""

    d: float
    theta: tuple = (1.0,)
    phi: tuple = (1.0,)


@dataclass(frozen=True)
class Const:
    c: float = 1.0


@dataclass(frozen=True)
class LogPower:
    p: float


@dataclass(frozen=True)
class PowerLaw:
    """``g_n = (n+1)**(gamma-1) * ell(n)``.

    ``ell(n) = c`` for :class:`Const` and ``log(n + e)**p`` for
    :class:`LogPower`.
    """

    gamma: float
    slowly_varying: Union[Const, LogPower] = Const(1.0)


@dataclass(frozen=True)
class ConstantOne:
    pass


@dataclass(frozen=True)
class PowerTail:
    """Tail ``g_n = scale * (n+1)**(gamma-1)``."""

    scale: float
    gamma: float


@dataclass(frozen=True)
class ShiftedLimitTail:
    """Tail ``g_n = limit - offset / (n+1)``."""

    limit: float
    offset: float


@dataclass(frozen=True)
class Custom:
    """Explicit prefix ``g_0..g_{m-1}``; indices ``n >= m`` follow ``tail``."""

    prefix: tuple
    tail: Union[PowerTail, ShiftedLimitTail]


Kind = Union[Farima, PowerLaw, ConstantOne, Custom]


@dataclass(frozen=True)
class GExtremes:
    """Supremum, lower bound, first argmax and nonnegativity index.

    Attributes
    ----------
    g_star : float
        ``sup g_i`` (``inf`` for diverging sequences).
    g_lower : float
        ``min(0, inf g_i)``.
    k_star : int or None
        Smallest index attaining ``g_star``; None when the supremum is not
        attained.
    n0 : int
        First index from which ``g_n`` and ``g_{[0,n)}`` are both nonnegative.
    certified : bool
        False when the result only describes the scanned prefix.
    """

    g_star: float
    g_lower: float
    k_star: Optional[int]
    n0: int
    certified: bool = True

    @property
    def flag(self):
        return "global" if self.certified else "prefix-only"


def _poly1(coefs):
    return float(np.sum(coefs))


def _validate(kind):
    if isinstance(kind, Farima):
        if not (np.isfinite(kind.d) and kind.d > 0):
            raise InvalidSpecError("farima: d must be a positive finite real")
        theta = np.asarray(kind.theta, dtype=float)
        phi = np.asarray(kind.phi, dtype=float)
        if theta.size == 0 or not np.any(theta != 0):
            raise InvalidSpecError("farima: theta is the zero polynomial")
        if phi.size == 0 or not np.any(phi != 0):
            raise InvalidSpecError("farima: phi is the zero polynomial")
        if phi[0] == 0:
            raise InvalidSpecError("farima: phi(0) must be nonzero")
        if _poly1(theta) == 0 or _poly1(phi) == 0:
            raise InvalidSpecError("farima: theta(1) and phi(1) must be nonzero")
        if _poly1(phi) / _poly1(theta) < 0:
            raise InvalidSpecError(
                "farima: theta(1)/phi(1) < 0 gives infinitely many negative "
                "coefficients")
    elif isinstance(kind, PowerLaw):
        if not kind.gamma > 0:
            raise InvalidSpecError("power_law: gamma must be positive")
        sv = kind.slowly_varying
        if isinstance(sv, Const) and not sv.c > 0:
            raise InvalidSpecError("power_law: constant must be positive")
        if not isinstance(sv, (Const, LogPower)):
            raise InvalidSpecError("power_law: unknown slowly varying part")
    elif isinstance(kind, Custom):
        if not all(np.isfinite(kind.prefix)):
            raise InvalidSpecError("custom: prefix must be finite")
        tail = kind.tail
        if isinstance(tail, PowerTail):
            if not (tail.scale > 0 and tail.gamma > 0):
                raise InvalidSpecError("custom: power tail needs scale>0, gamma>0")
        elif isinstance(tail, ShiftedLimitTail):
            if not (tail.limit > 0 and tail.offset >= 0):
                raise InvalidSpecError(
                    "custom: shifted_limit tail needs limit>0, offset>=0")
            if tail.limit * (len(kind.prefix) + 1) <= tail.offset:
                raise InvalidSpecError(
                    "custom: shifted_limit tail must be positive past the prefix")
        else:
            raise InvalidSpecError("custom: unknown tail rule")
    elif not isinstance(kind, ConstantOne):
        raise InvalidSpecError(f"unknown sequence kind {kind!r}")


class GSequence:
    """Coefficient stream with cached values and extended-precision prefix sums.

    Parameters
    ----------
    kind : Farima, PowerLaw, ConstantOne or Custom
        Closed-form description of the sequence.
    cache_cap : int, optional
        Largest number of coefficients held in memory. Requests beyond the
        cap are served by streaming.

    Notes
    -----
    Prefix sums are accumulated in ``np.longdouble`` and rounded once, so
    ``partial_sum(n+1) - partial_sum(n)`` equals ``g_n`` exactly for
    integer-valued sequences and to within one rounding otherwise.

    Growth of the cache is serialized by a lock; call :meth:`prepare` before
    sharing an instance across threads.
    """

    def __init__(self, kind: Kind, cache_cap: int = DEFAULT_CACHE_CAP):
        _validate(kind)
        self.kind = kind
        self.cache_cap = int(cache_cap)
        self._g = np.zeros(0)
        self._prefix = np.zeros(1, dtype=np.longdouble)
        self._lock = threading.Lock()

    def __repr__(self):
        return f"GSequence({self.kind!r})"

    # ------------------------------------------------------------------
    # structural metadata
    # ------------------------------------------------------------------
    @property
    def gamma(self) -> float:
        """Index ``gamma`` with ``g`` regularly varying of index ``gamma-1``."""
        k = self.kind
        if isinstance(k, Farima):
            return float(k.d)
        if isinstance(k, PowerLaw):
            return float(k.gamma)
        if isinstance(k, ConstantOne):
            return 1.0
        if isinstance(k.tail, PowerTail):
            return float(k.tail.gamma)
        return 1.0

    @property
    def farima_c(self) -> Optional[float]:
        """``phi(1)/theta(1)`` for FARIMA kinds, else None."""
        if isinstance(self.kind, Farima):
            return _poly1(self.kind.phi) / _poly1(self.kind.theta)
        return None

    @property
    def karamata_epsilon(self) -> Optional[Callable[[float], float]]:
        """``eps(x) = p/log(x)`` for the log-power family, else None."""
        k = self.kind
        if isinstance(k, PowerLaw) and isinstance(k.slowly_varying, LogPower):
            p = k.slowly_varying.p
            return lambda x: p / math.log(x)
        return None

    @property
    def limit_behavior(self) -> str:
        """One of ``"zero"``, ``"finite"`` or ``"infinite"``."""
        gam = self.gamma
        k = self.kind
        if isinstance(k, ConstantOne):
            return "finite"
        if isinstance(k, Custom) and isinstance(k.tail, ShiftedLimitTail):
            return "finite"
        if gam < 1:
            return "zero"
        if gam > 1:
            return "infinite"
        if isinstance(k, PowerLaw) and isinstance(k.slowly_varying, LogPower):
            p = k.slowly_varying.p
            return "infinite" if p > 0 else ("zero" if p < 0 else "finite")
        return "finite"

    @property
    def g_infinity(self) -> Optional[float]:
        """Limit of ``g_n`` in the finite-limit case, else None."""
        if self.limit_behavior != "finite":
            return None
        k = self.kind
        if isinstance(k, ConstantOne):
            return 1.0
        if isinstance(k, Farima):
            return 1.0 / self.farima_c
        if isinstance(k, PowerLaw):
            sv = k.slowly_varying
            return float(sv.c) if isinstance(sv, Const) else 1.0
        if isinstance(k.tail, ShiftedLimitTail):
            return float(k.tail.limit)
        return float(k.tail.scale)

    @property
    def is_log_power(self) -> bool:
        k = self.kind
        return isinstance(k, PowerLaw) and isinstance(k.slowly_varying, LogPower)

    @property
    def integer_order(self) -> Optional[int]:
        """``d`` when the sequence is an exact iterated cumulative sum, else None.

        ConstantOne has order 1; FARIMA with trivial polynomials and integer
        ``d`` has order ``d``.
        """
        k = self.kind
        if isinstance(k, ConstantOne):
            return 1
        if (isinstance(k, Farima) and float(k.d).is_integer()
                and np.allclose(np.trim_zeros(np.asarray(k.theta, float), "b"), [1.0])
                and np.allclose(np.trim_zeros(np.asarray(k.phi, float), "b"), [1.0])):
            return int(k.d)
        return None

    @property
    def tail_monotone(self) -> bool:
        """True when the coefficients are monotone from the first index on."""
        k = self.kind
        if isinstance(k, ConstantOne):
            return True
        if isinstance(k, Farima):
            return (len(np.trim_zeros(np.asarray(k.theta, float), "b")) <= 1
                    and len(np.trim_zeros(np.asarray(k.phi, float), "b")) <= 1)
        if isinstance(k, PowerLaw):
            return isinstance(k.slowly_varying, Const)
        return False

    # ------------------------------------------------------------------
    # coefficient generation
    # ------------------------------------------------------------------
    def _formula(self, n):
        """Closed-form coefficients for non-FARIMA kinds at indices ``n``."""
        k = self.kind
        n = np.asarray(n, dtype=float)
        if isinstance(k, ConstantOne):
            return np.ones_like(n)
        if isinstance(k, PowerLaw):
            base = np.power(n + 1.0, k.gamma - 1.0)
            sv = k.slowly_varying
            if isinstance(sv, Const):
                return sv.c * base
            return base * np.power(np.log(n + math.e), sv.p)
        m = len(k.prefix)
        out = self._tail_formula(n)
        if m:
            pre = np.asarray(k.prefix, dtype=float)
            idx = n.astype(np.int64)
            inside = idx < m
            out = np.where(inside, pre[np.minimum(idx, m - 1)], out)
        return out

    def _iter_chunks(self, stop, chunk=_CHUNK):
        """Yield consecutive coefficient blocks covering ``[0, stop)``."""
        if not isinstance(self.kind, Farima):
            for lo in range(0, stop, chunk):
                hi = min(stop, lo + chunk)
                yield self._formula(np.arange(lo, hi))
            return
        k = self.kind
        d = np.longdouble(k.d)
        theta = np.asarray(k.theta, dtype=np.longdouble)
        phi = np.asarray(k.phi, dtype=float)
        q = len(theta) - 1
        nontrivial_phi = len(np.trim_zeros(phi, "b")) > 1 or phi[0] != 1.0
        zi = np.zeros(max(len(phi), 1) - 1)
        hist = np.zeros(q, dtype=np.longdouble)
        last = np.longdouble(1.0)
        pos = 0
        while pos < stop:
            hi = min(stop, pos + chunk)
            idx = np.arange(pos, hi, dtype=np.longdouble)
            ratio = np.where(idx == 0, np.longdouble(1.0),
                             (idx - 1 + d) / np.where(idx == 0, 1, idx))
            binom = last * np.cumprod(ratio)
            if pos == 0:
                binom[0] = 1.0
            last = binom[-1]
            ext = np.concatenate([hist, binom])
            y = theta[0] * binom
            for j in range(1, q + 1):
                y = y + theta[j] * ext[q - j:q - j + binom.size]
            if q:
                hist = ext[-q:]
            y = y.astype(float)
            if nontrivial_phi:
                if zi.size:
                    y, zi = lfilter([1.0], phi, y, zi=zi)
                else:
                    y = y / phi[0]
            yield y
            pos = hi

    def prepare(self, n: int) -> None:
        """Fill the cache with at least ``n`` coefficients.

        Raises
        ------
        ResourceError
            If ``n`` exceeds ``cache_cap``.
        """
        n = int(n)
        if n <= self._g.size:
            return
        if n > self.cache_cap:
            raise ResourceError(
                f"requested {n} cached coefficients, cap is {self.cache_cap}; "
                "raise cache_cap or lower the horizon")
        with self._lock:
            if n <= self._g.size:
                return
            target = min(self.cache_cap, max(n, 2 * self._g.size, 1024))
            g = np.concatenate(list(self._iter_chunks(target)))
            prefix = np.empty(target + 1, dtype=np.longdouble)
            prefix[0] = 0
            np.cumsum(g.astype(np.longdouble), out=prefix[1:])
            self._prefix = prefix
            self._g = g

    def coefficients(self, n: int) -> np.ndarray:
        """Return ``g_0 ... g_{n-1}`` as a float array.

        Parameters
        ----------
        n : int
            Number of coefficients, ``n >= 0``.
        """
        n = int(n)
        if n < 0:
            raise DomainError("n must be nonnegative")
        if n <= self.cache_cap:
            self.prepare(n)
            return self._g[:n].copy()
        return np.concatenate(list(self._iter_chunks(n)))

    def prefix_array(self, n: int) -> np.ndarray:
        """Return ``g_{[0,0)} ... g_{[0,n)}`` (length ``n+1``) rounded to float."""
        self.prepare(n)
        return self._prefix[:n + 1].astype(float)

    def partial_sum(self, n: int) -> float:
        """Return ``g_{[0,n)} = sum_{0 <= i < n} g_i``."""
        n = int(n)
        if n < 0:
            raise DomainError("n must be nonnegative")
        if n <= self.cache_cap:
            self.prepare(n)
            return float(self._prefix[n])
        acc = np.longdouble(0)
        for block in self._iter_chunks(n):
            acc += np.sum(block.astype(np.longdouble))
        return float(acc)

    # ------------------------------------------------------------------
    # extremes
    # ------------------------------------------------------------------
    def extremes(self, search_horizon: int = 100_000) -> GExtremes:
        """Supremum, lower bound, first argmax and ``n0`` of the sequence.

        The scan covers ``search_horizon`` terms (at least the explicit
        prefix of a custom sequence). Results for kinds with a monotone tail
        and for custom sequences whose tail rule is monotone are global.
        """
        if search_horizon < 1:
            raise DomainError("search_horizon must be at least 1")
        k = self.kind
        horizon = int(search_horizon)
        if isinstance(k, Custom):
            horizon = max(horizon, len(k.prefix) + 2)
        g = self.coefficients(horizon)
        prefix = self.prefix_array(horizon)[:horizon]
        bad = np.flatnonzero((g < 0) | (prefix < 0))
        n0 = int(bad[-1]) + 1 if bad.size else 0
        g_lower = min(0.0, float(g.min()))
        behavior = self.limit_behavior
        certified = self.tail_monotone or isinstance(k, Custom)
        if behavior == "infinite":
            return GExtremes(math.inf, g_lower, None, n0, certified)
        k_star = int(np.argmax(g))
        g_star = float(g[k_star])
        if behavior == "finite" and g_star < self.g_infinity:
            return GExtremes(self.g_infinity, g_lower, None, n0, certified)
        return GExtremes(g_star, g_lower, k_star, n0, certified)

    # ------------------------------------------------------------------
    # generating function and scale function
    # ------------------------------------------------------------------
    def g_at(self, u: float) -> float:
        """Evaluate ``g(1 - 1/u)`` for ``u >= 1``.

        Closed forms are used for FARIMA and ConstantOne; other kinds sum the
        power series in blocks until a geometric bound on the remainder falls
        below double-precision resolution.
        """
        u = float(u)
        if u < 1:
            raise DomainError("g(1-1/u) needs u >= 1")
        k = self.kind
        if isinstance(k, ConstantOne):
            return u
        if isinstance(k, Farima):
            x = 1.0 - 1.0 / u
            theta = np.polyval(np.asarray(k.theta, float)[::-1], x)
            phi = np.polyval(np.asarray(k.phi, float)[::-1], x)
            return float(u ** k.d * theta / phi)
        if u >= _POLYLOG_FROM:
            closed = self._closed_at(u)
            if closed is not None:
                return closed
        return self._series_at(u)

    def _closed_at(self, u):
        """``g(1-1/u)`` through polylogarithm or logarithm closed forms, or None."""
        k = self.kind
        m = math.log1p(-1.0 / u)
        x = 1.0 - 1.0 / u
        if isinstance(k, PowerLaw):
            if not isinstance(k.slowly_varying, Const):
                return None
            return k.slowly_varying.c * _polylog_near_one(1.0 - k.gamma, m) / x
        tail = k.tail
        if isinstance(tail, PowerTail):
            total = tail.scale * _polylog_near_one(1.0 - tail.gamma, m) / x
        else:
            total = tail.limit * u - tail.offset * math.log(u) / x
        n = np.arange(len(k.prefix))
        if len(n):
            tail_part = self._tail_formula(n)
            total += math.fsum((np.asarray(k.prefix, dtype=float) - tail_part) * x ** n)
        return total

    def _tail_formula(self, n):
        tail = self.kind.tail
        n = np.asarray(n, dtype=float)
        if isinstance(tail, PowerTail):
            return tail.scale * np.power(n + 1.0, tail.gamma - 1.0)
        return tail.limit - tail.offset / (n + 1.0)

    def _series_at(self, u):
        if u == 1.0:
            return float(self._formula(np.array([0]))[0])
        logr = math.log1p(-1.0 / u)
        total = 0.0
        lo = 0
        chunk = 4096
        while True:
            hi = lo + chunk
            n = np.arange(lo, hi)
            g = self._formula(n)
            terms = g * np.exp(n * logr)
            total += math.fsum(terms)
            g_next = self._formula(np.array([hi - 1, hi]))
            ratio = g_next[1] / g_next[0] if g_next[0] > 0 else math.inf
            q = ratio * math.exp(logr)
            last = abs(terms[-1])
            if q < 1 and g_next[0] > 0:
                remainder = last * q / (1.0 - q)
                if remainder <= 1e-17 * abs(total):
                    return total
            lo = hi
            chunk = min(2 * chunk, 1 << 22)

    def scale_U(self, t, mode: Optional[str] = None):
        """Solve ``g(1 - 1/u) = t`` for ``u > 1``.

        Parameters
        ----------
        t : float or array_like
            Level(s), ``t > 0``.
        mode : {"exact", "asymptotic"}, optional
            ``"asymptotic"`` uses the closed forms ``(c t)**(1/d)`` for FARIMA
            and ``(t / (c Gamma(gamma)))**(1/gamma)`` for a constant power
            law. ``"exact"`` solves the equation with Brent's method. The
            default is asymptotic for FARIMA and exact otherwise.

        Raises
        ------
        DomainError
            If ``t`` is not above ``g_0``, where no solution exists.
        """
        if mode is None:
            mode = "asymptotic" if isinstance(self.kind, Farima) else "exact"
        if mode not in ("exact", "asymptotic"):
            raise DomainError(f"unknown mode {mode!r}")
        arr = np.asarray(t, dtype=float)
        out = np.vectorize(lambda s: self._scale_U_scalar(s, mode), otypes=[float])(arr)
        return float(out) if out.ndim == 0 else out

    def _scale_U_scalar(self, t, mode):
        if not t > 0:
            raise DomainError("scale_U needs t > 0")
        k = self.kind
        if mode == "asymptotic":
            if isinstance(k, Farima):
                return (self.farima_c * t) ** (1.0 / k.d)
            if isinstance(k, ConstantOne):
                return t
            if isinstance(k, PowerLaw) and isinstance(k.slowly_varying, Const):
                return (t / (k.slowly_varying.c * special.gamma(k.gamma))) ** (1.0 / k.gamma)
            return self._scale_U_scalar(t, "exact")
        if isinstance(k, ConstantOne):
            if not t > 1:
                raise DomainError("scale_U needs t > g_0 = 1")
            return float(t)
        g0 = self.g_at(1.0)
        if not t > g0:
            raise DomainError(f"t={t!r} not above g(0)={g0!r}; no solution u > 1")
        hi = 2.0
        while self.g_at(hi) < t:
            hi *= 2.0
            if hi > 1e300:
                raise DomainError(f"g(1-1/u) never reaches t={t!r}")
        return optimize.brentq(lambda u: self.g_at(u) - t, 1.0, hi,
                               xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)

    # ------------------------------------------------------------------
    # diagnostics
    # ------------------------------------------------------------------
    def karamata_check(self, n: int, x: float):
        """Residuals of the uniform Karamata equivalents at ``(n, x)``.

        Returns
        -------
        tuple of float
            ``|g_[nx] n Gamma(gamma) / (x**(gamma-1) g(1-1/n)) - 1|`` and
            ``|g_[0,nx) Gamma(1+gamma) / (x**gamma g(1-1/n)) - 1|``.
        """
        if n < 2:
            raise DomainError("karamata_check needs n >= 2")
        if not x > 0:
            raise DomainError("karamata_check needs x > 0")
        gam = self.gamma
        gn = self.g_at(float(n))
        idx = int(math.floor(n * x))
        m = int(math.ceil(n * x))
        self.prepare(max(idx + 1, m))
        r1 = abs(self._g[idx] * n * special.gamma(gam) / (x ** (gam - 1.0) * gn) - 1.0)
        r2 = abs(float(self._prefix[m]) * special.gamma(1.0 + gam) / (x ** gam * gn) - 1.0)
        return float(r1), float(r2)


# ----------------------------------------------------------------------
# JSON (de)serialization
# ----------------------------------------------------------------------
_SEQ_FIELDS = {
    "farima": {"d", "theta", "phi"},
    "power_law": {"gamma", "slowly_varying", "c", "p"},
    "constant_one": set(),
    "custom": {"prefix", "tail"},
}


def _check_fields(obj, allowed, where):
    unknown = set(obj) - allowed
    if unknown:
        raise InvalidSpecError(f"{where}: unknown field(s) {sorted(unknown)}")


def sequence_from_dict(obj: dict, cache_cap: int = DEFAULT_CACHE_CAP) -> GSequence:
    """Build a :class:`GSequence` from its JSON form.

    Examples of accepted objects::

        {"kind": "farima", "d": 0.4, "theta": [1], "phi": [1]}
        {"kind": "power_law", "gamma": 1, "slowly_varying": "log_power", "p": 2}
        {"kind": "constant_one"}
        {"kind": "custom", "prefix": [-1, 3, 2],
         "tail": {"rule": "power", "scale": 1, "gamma": 0.5}}
    """
    if not isinstance(obj, dict):
        raise InvalidSpecError("sequence spec must be a JSON object")
    obj = dict(obj)
    obj.pop("schema_version", None)
    tag = obj.pop("kind", None)
    if tag not in _SEQ_FIELDS:
        raise InvalidSpecError(f"sequence.kind: expected one of {sorted(_SEQ_FIELDS)}, got {tag!r}")
    _check_fields(obj, _SEQ_FIELDS[tag], f"sequence[{tag}]")
    try:
        if tag == "farima":
            kind = Farima(float(obj["d"]), tuple(float(v) for v in obj.get("theta", [1.0])),
                          tuple(float(v) for v in obj.get("phi", [1.0])))
        elif tag == "power_law":
            sv_tag = obj.get("slowly_varying", "const")
            if sv_tag == "const":
                if "p" in obj:
                    raise InvalidSpecError("sequence[power_law]: 'p' requires slowly_varying=log_power")
                sv = Const(float(obj.get("c", 1.0)))
            elif sv_tag == "log_power":
                if "c" in obj:
                    raise InvalidSpecError("sequence[power_law]: 'c' requires slowly_varying=const")
                sv = LogPower(float(obj["p"]))
            else:
                raise InvalidSpecError(f"sequence.slowly_varying: unknown value {sv_tag!r}")
            kind = PowerLaw(float(obj["gamma"]), sv)
        elif tag == "constant_one":
            kind = ConstantOne()
        else:
            tail = dict(obj["tail"])
            rule = tail.pop("rule", None)
            if rule == "power":
                _check_fields(tail, {"scale", "gamma"}, "sequence.tail[power]")
                tail_obj = PowerTail(float(tail["scale"]), float(tail["gamma"]))
            elif rule == "shifted_limit":
                _check_fields(tail, {"limit", "offset"}, "sequence.tail[shifted_limit]")
                tail_obj = ShiftedLimitTail(float(tail["limit"]), float(tail["offset"]))
            else:
                raise InvalidSpecError(f"sequence.tail.rule: unknown value {rule!r}")
            kind = Custom(tuple(float(v) for v in obj["prefix"]), tail_obj)
    except KeyError as exc:
        raise InvalidSpecError(f"sequence[{tag}]: missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InvalidSpecError):
            raise
        raise InvalidSpecError(f"sequence[{tag}]: {exc}") from None
    return GSequence(kind, cache_cap=cache_cap)


def sequence_to_dict(seq: GSequence) -> dict:
    """Inverse of :func:`sequence_from_dict`."""
    k = seq.kind
    if isinstance(k, Farima):
        return {"kind": "farima", "d": k.d, "theta": list(k.theta), "phi": list(k.phi)}
    if isinstance(k, PowerLaw):
        sv = k.slowly_varying
        if isinstance(sv, Const):
            return {"kind": "power_law", "gamma": k.gamma, "slowly_varying": "const", "c": sv.c}
        return {"kind": "power_law", "gamma": k.gamma, "slowly_varying": "log_power", "p": sv.p}
    if isinstance(k, ConstantOne):
        return {"kind": "constant_one"}
    tail = k.tail
    if isinstance(tail, PowerTail):
        t = {"rule": "power", "scale": tail.scale, "gamma": tail.gamma}
    else:
        t = {"rule": "shifted_limit", "limit": tail.limit, "offset": tail.offset}
    return {"kind": "custom", "prefix": list(k.prefix), "tail": t}
