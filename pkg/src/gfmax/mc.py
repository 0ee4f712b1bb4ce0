"""Monte Carlo estimation of ``P{M > t}`` and conditioned path statistics.

Random numbers come from the Philox4x32-10 counter-based generator. Draw
``j`` of stream ``s`` in replicate ``r`` is a pure function of
``(seed, j, s, r)``, so a replicate produces the same path whatever thread
runs it. Per-replicate outputs land in fixed slots and are reduced with
numpy's pairwise summation, which makes every estimate bit-identical across
worker counts.

Innovations are ``X = mu + sign * s * (V - alpha/(alpha-1))`` with ``V``
Pareto on ``[1, inf)``, sign ``+`` with probability ``p`` and
``s = (c_F/p)**(1/alpha)``; hence ``E X = mu``, ``P{X > x} ~ c_F x**(-alpha)``
and ``P{X < -x} ~ (q/p) c_F x**(-alpha)``.

The importance sampler is a defensive mixture. With probability ``w`` a
replicate is crude. Otherwise an index ``n`` is drawn uniformly from
``1..m`` with ``m = ceil(U(t)/eps)`` and ``X_n`` is drawn from ``F`` given
``X > c``, ``c = theta * chi(t)``. With ``K`` the number of indices
``j <= m`` with ``X_j > c``, the likelihood ratio is
``1 / (w + (1-w) K / (m Fbar(c)))``, which makes the estimator unbiased.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from numba import njit

from .errors import DomainError, InsufficientSampleError, InvalidSpecError, ResourceError
from .gseq import GSequence, sequence_from_dict, sequence_to_dict
from .tails import InnovationSpec, innovation_from_dict, innovation_to_dict

__all__ = [
    "philox4x32", "CounterRNG", "Crude", "BigJumpIS", "SimConfig", "PathStats",
    "SimResult", "PathTrace", "ConditionedStats", "sample_innovation",
    "survival_exact", "simulate_path", "simulate_endpoints", "estimate_tail",
    "conditioned_statistics", "weighted_ks", "weighted_ks_two_sample",
    "resolve_workers", "config_from_dict", "config_to_dict",
]

_MASK = np.uint64(0xFFFFFFFF)
_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_S32 = np.uint64(32)
_S5 = np.uint64(5)
_S6 = np.uint64(6)
_TWO26 = np.uint64(67108864)
_INV53 = 1.0 / 9007199254740992.0

STREAM_INNOV = 0
STREAM_CONTROL = 1
CHUNK = 4096


@njit(cache=True, nogil=True)
def philox4x32(c0, c1, c2, c3, k0, k1):
    """Philox4x32 with 10 rounds on 32-bit words stored in uint64."""
    for _ in range(10):
        p0 = _M0 * c0
        p1 = _M1 * c2
        hi0 = p0 >> _S32
        lo0 = p0 & _MASK
        hi1 = p1 >> _S32
        lo1 = p1 & _MASK
        c0, c1, c2, c3 = (hi1 ^ c1 ^ k0) & _MASK, lo1, (hi0 ^ c3 ^ k1) & _MASK, lo0
        k0 = (k0 + _W0) & _MASK
        k1 = (k1 + _W1) & _MASK
    return c0, c1, c2, c3


@njit(cache=True, nogil=True)
def _uniform_pair(block, stream, rep, k0, k1):
    a, b, c, d = philox4x32(np.uint64(block) & _MASK, np.uint64(stream),
                            np.uint64(rep) & _MASK, np.uint64(rep) >> _S32, k0, k1)
    u1 = ((a >> _S5) * _TWO26 + (b >> _S6)) * _INV53
    u2 = ((c >> _S5) * _TWO26 + (d >> _S6)) * _INV53
    return u1, u2


def _key(seed):
    seed = int(seed)
    if not 0 <= seed < 2 ** 64:
        raise InvalidSpecError("seed must be a 64-bit unsigned integer")
    return np.uint64(seed & 0xFFFFFFFF), np.uint64(seed >> 32)


@njit(cache=True, nogil=True)
def _uniform_block(stream, rep, k0, k1, n, out):
    for i in range((n + 1) // 2):
        u1, u2 = _uniform_pair(i, stream, rep, k0, k1)
        out[2 * i] = u1
        if 2 * i + 1 < n:
            out[2 * i + 1] = u2


class CounterRNG:
    """Deterministic uniform source addressed by ``(stream, replicate, index)``.

    Parameters
    ----------
    seed : int
        64-bit key.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)
        self._k0, self._k1 = _key(seed)

    def uniforms(self, n: int, stream: int = 0, replicate: int = 0) -> np.ndarray:
        """Return ``n`` uniforms in ``[0, 1)`` from the given substream."""
        out = np.empty(int(n))
        _uniform_block(np.uint64(stream), np.uint64(replicate), self._k0, self._k1, int(n), out)
        return out


# ----------------------------------------------------------------------
# innovation sampler
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class _Law:
    mu: float
    s: float
    shift: float
    inv_alpha: float
    alpha: float
    q: float
    degenerate: bool


def _law(innov: InnovationSpec) -> _Law:
    a = innov.alpha
    return _Law(innov.mu, innov.pareto_scale, a / (a - 1.0), 1.0 / a, a, innov.q, innov.degenerate)


@njit(cache=True, nogil=True)
def _innovation(u_sign, u_v, mu, s, shift, inv_alpha, q, degenerate):
    if degenerate:
        return mu
    v = (1.0 - u_v) ** (-inv_alpha)
    if u_sign < q:
        return mu - s * (v - shift)
    return mu + s * (v - shift)


def survival_exact(innov: InnovationSpec, x):
    """Exact ``P{X > x}`` of the sampler law."""
    law = _law(innov)
    x = np.asarray(x, dtype=float)
    if law.degenerate:
        return (law.mu > x).astype(float)
    v_right = (x - law.mu) / law.s + law.shift
    v_left = law.shift - (x - law.mu) / law.s
    right = np.where(v_right > 1.0, np.power(np.maximum(v_right, 1.0), -law.alpha), 1.0)
    left = np.where(v_left > 1.0, 1.0 - np.power(np.maximum(v_left, 1.0), -law.alpha), 0.0)
    out = (1.0 - law.q) * right + law.q * left
    return float(out) if out.ndim == 0 else out


@njit(cache=True, nogil=True)
def _draw_innovations(rep, k0, k1, n, mu, s, shift, inv_alpha, q, degenerate, out):
    for j in range(1, n + 1):
        if q > 0.0:
            u_sign, u_v = _uniform_pair(j - 1, 0, rep, k0, k1)
        else:
            u1, u2 = _uniform_pair((j - 1) >> 1, 0, rep, k0, k1)
            u_sign = 1.0
            u_v = u1 if (j - 1) & 1 == 0 else u2
        out[j - 1] = _innovation(u_sign, u_v, mu, s, shift, inv_alpha, q, degenerate)


def sample_innovation(innov: InnovationSpec, seed: int, size: int = 1, replicate: int = 0) -> np.ndarray:
    """Draw ``X_1..X_size`` of replicate ``replicate`` exactly as the path engine does."""
    law = _law(innov)
    k0, k1 = _key(seed)
    out = np.empty(int(size))
    _draw_innovations(np.uint64(replicate), k0, k1, int(size), law.mu, law.s, law.shift,
                      law.inv_alpha, law.q, law.degenerate, out)
    return out


# ----------------------------------------------------------------------
# path kernel
# ----------------------------------------------------------------------
@njit(cache=True, nogil=True)
def _conditional_draw(rep, k0, k1, c, v_c, v_l, mu, s, shift, inv_alpha, q, degenerate):
    if v_l <= 1.0:
        u1, _ = _uniform_pair(1, 1, rep, k0, k1)
        v = v_c * (1.0 - u1) ** (-inv_alpha)
        return mu + s * (v - shift)
    block = 1
    while True:
        u1, u2 = _uniform_pair(block, 1, rep, k0, k1)
        x = _innovation(u1, u2, mu, s, shift, inv_alpha, q, degenerate)
        if x > c:
            return x
        block += 1


@njit(cache=True, nogil=True)
def _replicate(rep, k0, k1, n_max, end, t, mode, order, g,
               mu, s, shift, inv_alpha, q, degenerate,
               use_is, w_mix, m_window, c_thr, v_c, v_l, fbar_c,
               xbuf, state, record, path, out_f, out_i, slot):
    chosen = 0
    if use_is:
        u_mix, u_idx = _uniform_pair(0, 1, rep, k0, k1)
        if u_mix >= w_mix:
            chosen = 1 + int(u_idx * m_window)
            if chosen > m_window:
                chosen = m_window
    for i in range(order):
        state[i] = 0.0
    s_cur = 0.0
    m_hat = -np.inf
    l_arg = 0
    n_pass = 0
    n_pass2 = 0
    x_big = -np.inf
    j_big = 0
    count = 0
    ub1 = 0.0
    ub2 = 0.0
    for j in range(1, end + 1):
        if q > 0.0:
            u_sign, u_v = _uniform_pair(j - 1, 0, rep, k0, k1)
        else:
            if (j - 1) & 1 == 0:
                ub1, ub2 = _uniform_pair((j - 1) >> 1, 0, rep, k0, k1)
                u_v = ub1
            else:
                u_v = ub2
            u_sign = 1.0
        if j == chosen:
            x = _conditional_draw(rep, k0, k1, c_thr, v_c, v_l, mu, s, shift, inv_alpha, q, degenerate)
        else:
            x = _innovation(u_sign, u_v, mu, s, shift, inv_alpha, q, degenerate)
        if use_is and j <= m_window and x > c_thr:
            count += 1
        if mode == 0:
            state[0] += x
            for i in range(1, order):
                state[i] += state[i - 1]
            s_cur = state[order - 1]
        else:
            xbuf[j] = x
            acc = 0.0
            for i in range(j):
                acc += g[i] * xbuf[j - i]
            s_cur = acc
        if record:
            path[j] = s_cur
        if j <= n_max:
            if s_cur > m_hat:
                m_hat = s_cur
                l_arg = j
            if n_pass == 0:
                if x > x_big:
                    x_big = x
                    j_big = j
                if s_cur > t:
                    n_pass = j
        elif not record:
            if n_pass > 0:
                break
            if s_cur > t:
                n_pass2 = j
                break
    weight = 1.0
    if use_is:
        weight = 1.0 / (w_mix + (1.0 - w_mix) * count / (m_window * fbar_c))
    out_f[slot, 0] = weight
    out_f[slot, 1] = m_hat
    out_f[slot, 2] = x_big
    out_f[slot, 3] = s_cur if end == n_max else np.nan
    out_i[slot, 0] = n_pass
    out_i[slot, 1] = n_pass2
    out_i[slot, 2] = j_big
    out_i[slot, 3] = l_arg
    out_i[slot, 4] = count


@njit(cache=True, nogil=True)
def _run_block(lo, hi, k0, k1, n_max, end, t, mode, order, g,
               mu, s, shift, inv_alpha, q, degenerate,
               use_is, w_mix, m_window, c_thr, v_c, v_l, fbar_c, out_f, out_i):
    xbuf = np.empty(end + 1 if mode == 1 else 1)
    state = np.empty(max(order, 1))
    path = np.empty(1)
    for r in range(lo, hi):
        _replicate(np.uint64(r), k0, k1, n_max, end, t, mode, order, g,
                   mu, s, shift, inv_alpha, q, degenerate,
                   use_is, w_mix, m_window, c_thr, v_c, v_l, fbar_c,
                   xbuf, state, False, path, out_f, out_i, r)


@njit(cache=True, nogil=True)
def _record_one(rep, k0, k1, n_max, end, t, mode, order, g,
                mu, s, shift, inv_alpha, q, degenerate,
                use_is, w_mix, m_window, c_thr, v_c, v_l, fbar_c, path):
    xbuf = np.empty(end + 1 if mode == 1 else 1)
    state = np.empty(max(order, 1))
    out_f = np.empty((1, 4))
    out_i = np.empty((1, 5), dtype=np.int64)
    path[0] = 0.0
    _replicate(np.uint64(rep), k0, k1, n_max, end, t, mode, order, g,
               mu, s, shift, inv_alpha, q, degenerate,
               use_is, w_mix, m_window, c_thr, v_c, v_l, fbar_c,
               xbuf, state, True, path, out_f, out_i, 0)


# ----------------------------------------------------------------------
# configuration
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class Crude:
    """Plain Monte Carlo."""


@dataclass(frozen=True)
class BigJumpIS:
    """Single-big-jump importance sampling.

    Attributes
    ----------
    jump_window_eps : float
        Jump indices are proposed uniformly on ``1..ceil(U(t)/eps)``.
    tilt_threshold_theta : float
        The proposed jump exceeds ``theta * chi(t)``.
    mixture_weight : float
        Probability of a crude replicate, in ``(0, 1)``.
    """

    jump_window_eps: float = 0.1
    tilt_threshold_theta: float = 0.1
    mixture_weight: float = 0.3


@dataclass(frozen=True)
class SimConfig:
    """Description of a Monte Carlo run.

    ``n_max = ceil(horizon_factor * U(t))``; every run also follows paths up to
    ``2 n_max`` to measure the truncation bias.
    """

    seq: GSequence
    innov: InnovationSpec
    t: float
    horizon_factor: float = 50.0
    replicates: int = 10_000
    method: Union[Crude, BigJumpIS] = Crude()
    seed: int = 0
    min_conditioned: int = 500
    path_mode: str = "auto"
    u_mode: Optional[str] = None

    def __post_init__(self):
        if not self.t > 0:
            raise InvalidSpecError("t must be positive")
        if not self.horizon_factor >= 1:
            raise InvalidSpecError("horizon_factor must be at least 1")
        if not int(self.replicates) >= 1:
            raise InvalidSpecError("replicates must be at least 1")
        if isinstance(self.method, BigJumpIS):
            m = self.method
            if not 0 < m.mixture_weight < 1:
                raise InvalidSpecError("mixture_weight must lie in (0, 1)")
            if not m.jump_window_eps > 0:
                raise InvalidSpecError("jump_window_eps must be positive")
            if not m.tilt_threshold_theta > 0:
                raise InvalidSpecError("tilt_threshold_theta must be positive")
        elif not isinstance(self.method, Crude):
            raise InvalidSpecError("method must be Crude or BigJumpIS")
        if self.path_mode not in ("auto", "incremental", "naive"):
            raise InvalidSpecError("path_mode must be auto, incremental or naive")
        _key(self.seed)

    @property
    def U(self) -> float:
        return float(self.seq.scale_U(self.t, self.u_mode))

    @property
    def chi(self) -> float:
        """Jump scale: ``U(t)`` for diverging coefficients, ``t`` otherwise."""
        return self.U if self.seq.limit_behavior == "infinite" else float(self.t)

    @property
    def n_max(self) -> int:
        return int(math.ceil(self.horizon_factor * self.U))


@dataclass(frozen=True)
class PathStats:
    """Statistics of one replicate; ``Y_t = X_{J_t} / chi(t)``."""

    replicate: int
    exceeded: bool
    N_t: int
    J_t: int
    tau_t: float
    Y_t: float
    overshoot: float
    L: int
    M_hat: float
    weight: float


@dataclass
class SimResult:
    """Estimate of ``P{M > t}`` with diagnostics.

    Attributes
    ----------
    p_hat, std_err : float
        Estimate over the horizon ``n_max`` and its standard error.
    replicates_used : int
    horizon_bias_diag : tuple of float
        Estimates over ``n_max`` and ``2 n_max``.
    table : dict of ndarray
        Per-replicate columns for the replicates that exceeded ``t``.
    """

    p_hat: float
    std_err: float
    replicates_used: int
    horizon_bias_diag: tuple
    std_err_2n: float
    n_max: int
    U: float
    chi: float
    table: dict
    config: SimConfig = field(repr=False, default=None)

    @property
    def conditioned_paths(self):
        tb = self.table
        return [PathStats(int(tb["replicate"][i]), True, int(tb["N_t"][i]), int(tb["J_t"][i]),
                          float(tb["tau_t"][i]), float(tb["Y_t"][i]), float(tb["overshoot"][i]),
                          int(tb["L"][i]), float(tb["M_hat"][i]), float(tb["weight"][i]))
                for i in range(tb["replicate"].size)]

    @property
    def n_conditioned(self) -> int:
        return int(self.table["replicate"].size)

    def summary(self) -> dict:
        return {"p_hat": self.p_hat, "std_err": self.std_err,
                "replicates_used": self.replicates_used,
                "horizon_bias_diag": list(self.horizon_bias_diag),
                "std_err_2n": self.std_err_2n, "n_max": self.n_max,
                "U": self.U, "chi": self.chi, "n_conditioned": self.n_conditioned}


def resolve_workers(workers: Optional[int] = None) -> int:
    """Worker count from the argument, else ``GFMAX_THREADS``, else 1."""
    if workers is None:
        env = os.environ.get("GFMAX_THREADS")
        workers = int(env) if env else 1
    if workers < 1:
        raise InvalidSpecError("workers must be at least 1")
    return int(workers)


def _path_setup(seq: GSequence, end: int, path_mode: str):
    order = seq.integer_order
    if path_mode == "incremental" and order is None:
        raise InvalidSpecError("incremental path mode needs ConstantOne or FARIMA with integer d")
    if 2 * end > seq.cache_cap:
        raise ResourceError(
            f"horizon of {end} steps exceeds the coefficient cache cap {seq.cache_cap}; "
            "lower horizon_factor or t, or raise cache_cap")
    if order is not None and path_mode != "naive":
        return 0, order, np.zeros(1)
    return 1, 1, seq.coefficients(end)


def _is_params(cfg: SimConfig, n_max: int):
    law = _law(cfg.innov)
    if not isinstance(cfg.method, BigJumpIS):
        return False, 1.0, 1, 0.0, 0.0, 0.0, 1.0
    m = cfg.method
    c = m.tilt_threshold_theta * cfg.chi
    window = int(min(math.ceil(cfg.U / m.jump_window_eps), n_max))
    v_c = (c - law.mu) / law.s + law.shift
    v_l = law.shift - (c - law.mu) / law.s
    fbar = float(survival_exact(cfg.innov, c))
    if not fbar > 0:
        raise InvalidSpecError("tilt threshold lies beyond the support of the innovations")
    return True, m.mixture_weight, window, c, v_c, v_l, fbar


def _run_all(cfg: SimConfig, n_max: int, end: int, t: float, workers: int):
    mode, order, g = _path_setup(cfg.seq, end, cfg.path_mode)
    law = _law(cfg.innov)
    use_is, w_mix, window, c, v_c, v_l, fbar = _is_params(cfg, n_max)
    k0, k1 = _key(cfg.seed)
    R = int(cfg.replicates)
    out_f = np.empty((R, 4))
    out_i = np.empty((R, 5), dtype=np.int64)
    args = (k0, k1, n_max, end, float(t), mode, order, g,
            law.mu, law.s, law.shift, law.inv_alpha, law.q, law.degenerate,
            use_is, w_mix, window, c, v_c, v_l, fbar, out_f, out_i)
    blocks = [(lo, min(R, lo + CHUNK)) for lo in range(0, R, CHUNK)]
    if workers == 1:
        for lo, hi in blocks:
            _run_block(lo, hi, *args)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(lambda b: _run_block(b[0], b[1], *args), blocks))
    return out_f, out_i


def _mean_se(values):
    n = values.size
    mean = float(np.sum(values) / n)
    if n < 2:
        return mean, 0.0
    var = float(np.sum((values - mean) ** 2) / (n - 1))
    return mean, math.sqrt(var / n)


def estimate_tail(config: SimConfig, workers: Optional[int] = None) -> SimResult:
    """Estimate ``P{max_{n <= n_max} S_n > t}``.

    Raises
    ------
    ResourceError
        If ``2 n_max`` exceeds the coefficient cache cap.
    """
    workers = resolve_workers(workers)
    n_max = config.n_max
    U, chi = config.U, config.chi
    out_f, out_i = _run_all(config, n_max, 2 * n_max, config.t, workers)
    weight = out_f[:, 0]
    hit = out_i[:, 0] > 0
    hit2 = hit | (out_i[:, 1] > 0)
    p_hat, se = _mean_se(np.where(hit, weight, 0.0))
    p_2n, se_2n = _mean_se(np.where(hit2, weight, 0.0))
    idx = np.flatnonzero(hit)
    t = float(config.t)
    table = {
        "replicate": idx.astype(np.int64),
        "N_t": out_i[idx, 0],
        "J_t": out_i[idx, 2],
        "tau_t": out_i[idx, 2] / U,
        "Y_t": out_f[idx, 2] / chi,
        "overshoot": (out_f[idx, 1] - t) / t,
        "L": out_i[idx, 3],
        "M_hat": out_f[idx, 1],
        "weight": weight[idx],
    }
    return SimResult(p_hat, se, int(config.replicates), (p_hat, p_2n), se_2n,
                     n_max, U, chi, table, config)


# ----------------------------------------------------------------------
# single paths
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class PathTrace:
    """``S_0..S_n`` (with ``S_0 = 0``) and its running maximum."""

    S: np.ndarray
    running_max: np.ndarray


def _record(cfg: SimConfig, rep: int, end: int, n_max: int) -> np.ndarray:
    mode, order, g = _path_setup(cfg.seq, end, cfg.path_mode)
    law = _law(cfg.innov)
    use_is, w_mix, window, c, v_c, v_l, fbar = _is_params(cfg, n_max)
    k0, k1 = _key(cfg.seed)
    path = np.empty(end + 1)
    _record_one(np.uint64(rep), k0, k1, n_max, end, float(cfg.t), mode, order, g,
                law.mu, law.s, law.shift, law.inv_alpha, law.q, law.degenerate,
                use_is, w_mix, window, c, v_c, v_l, fbar, path)
    return path


def simulate_path(seq: GSequence, innov: InnovationSpec, n_max: int, seed: int,
                  replicate: int = 0, mode: str = "auto") -> PathTrace:
    """Simulate ``S_1..S_{n_max}`` for one replicate.

    ``mode="naive"`` evaluates each ``S_n`` as a full convolution;
    ``"incremental"`` uses repeated cumulative sums and is available for
    ConstantOne and FARIMA with integer ``d``.
    """
    if n_max < 1:
        raise DomainError("n_max must be at least 1")
    cfg = SimConfig(seq, innov, t=1.0, horizon_factor=1.0, replicates=1, seed=seed,
                    path_mode=mode, u_mode="asymptotic")
    path = _record(cfg, replicate, int(n_max), int(n_max))
    return PathTrace(path, np.maximum.accumulate(path))


def simulate_endpoints(seq: GSequence, innov: InnovationSpec, n: int, paths: int, seed: int,
                       workers: Optional[int] = None, mode: str = "auto") -> np.ndarray:
    """Return ``S_n`` for ``paths`` independent replicates."""
    cfg = SimConfig(seq, innov, t=1.0, horizon_factor=1.0, replicates=int(paths), seed=seed,
                    path_mode=mode, u_mode="asymptotic")
    out_f, _ = _run_all(cfg, int(n), int(n), math.inf, resolve_workers(workers))
    return out_f[:, 3].copy()


# ----------------------------------------------------------------------
# conditioned statistics
# ----------------------------------------------------------------------
def weighted_ks(x, w, cdf) -> float:
    """Kolmogorov-Smirnov distance between a weighted sample and a CDF."""
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    order = np.argsort(x, kind="stable")
    xs = x[order]
    cw = np.cumsum(w[order])
    cw /= cw[-1]
    before = np.concatenate([[0.0], cw[:-1]])
    f = np.asarray(cdf(xs), dtype=float)
    return float(max(np.max(np.abs(cw - f)), np.max(np.abs(before - f))))


def weighted_ks_two_sample(x, w, y) -> float:
    """KS distance between a weighted sample ``(x, w)`` and an unweighted sample ``y``."""
    x = np.asarray(x, dtype=float)
    w = np.asarray(w, dtype=float)
    y = np.sort(np.asarray(y, dtype=float))
    order = np.argsort(x, kind="stable")
    xs = x[order]
    cw = np.cumsum(w[order])
    cw /= cw[-1]
    grid = np.concatenate([xs, y])
    fx = np.concatenate([[0.0], cw])[np.searchsorted(xs, grid, side="right")]
    fy = np.searchsorted(y, grid, side="right") / y.size
    return float(np.max(np.abs(fx - fy)))


@dataclass
class ConditionedStats:
    """Empirical laws of the conditioned statistics and their limits.

    Attributes
    ----------
    tau, Y, Y_over_rho, overshoot, L_over_U, N_over_U, weight : ndarray
        One entry per conditioned path.
    lam : ndarray
        Grid on which ``paths`` holds ``S_{floor(lam U)} / t``.
    tau_cdf : callable or None
        Limit CDF of ``tau`` (density proportional to ``rho_gamma**(-alpha)``
        after the mean rescaling); None when no limit law is available.
    """

    tau: np.ndarray
    Y: np.ndarray
    Y_over_rho: np.ndarray
    overshoot: np.ndarray
    L_over_U: np.ndarray
    N_over_U: np.ndarray
    weight: np.ndarray
    replicate: np.ndarray
    lam: np.ndarray
    paths: np.ndarray
    tau_cdf: Optional[object]
    alpha: float
    gamma: float
    mu: float

    def ks_tau(self) -> float:
        return weighted_ks(self.tau, self.weight, self.tau_cdf)

    def ks_y_over_rho(self) -> float:
        a = self.alpha
        return weighted_ks(self.Y_over_rho, self.weight,
                           lambda y: np.where(y >= 1.0, 1.0 - np.maximum(y, 1.0) ** (-a), 0.0))

    def ks_overshoot(self, limit_draws) -> float:
        """Two-sample distance of ``(M-t)/t`` against draws of ``M_lim - 1``."""
        return weighted_ks_two_sample(self.overshoot, self.weight, limit_draws)


def conditioned_statistics(config: Union[SimConfig, SimResult], workers: Optional[int] = None,
                           eps_grid: float = 0.1, n_grid: int = 200,
                           max_paths: Optional[int] = None) -> ConditionedStats:
    """Collect conditioned statistics and rescaled paths of exceeding replicates.

    Parameters
    ----------
    config : SimConfig or SimResult
        A result is reused; a config is simulated first.
    eps_grid, n_grid : float, int
        Paths are sampled on ``n_grid`` uniform points of ``[0, 1/eps_grid]``.
    max_paths : int, optional
        Number of rescaled paths to record (default all).

    Raises
    ------
    InsufficientSampleError
        If fewer than ``min_conditioned`` replicates exceeded ``t``.
    """
    from .limitlaw import tau_table
    from .rho import rho_values

    result = config if isinstance(config, SimResult) else estimate_tail(config, workers)
    cfg = result.config
    n = result.n_conditioned
    if n < cfg.min_conditioned:
        raise InsufficientSampleError(
            f"only {n} conditioned paths, {cfg.min_conditioned} required", achieved=n)
    tb = result.table
    gam = cfg.seq.gamma
    alpha, mu = cfg.innov.alpha, cfg.innov.mu
    tau = tb["tau_t"]
    if gam >= 1:
        scale = (-mu) ** (1.0 / gam)
        y_over_rho = tb["Y_t"] / rho_values(gam, tau * scale) / (-mu) ** (1.0 - 1.0 / gam)
        table = tau_table(gam, alpha)
        tau_cdf = lambda u: table.cdf(np.asarray(u) * scale)
    else:
        y_over_rho = tb["Y_t"]
        tau_cdf = None
    lam = np.linspace(0.0, 1.0 / eps_grid, n_grid)
    idx = np.floor(lam * result.U).astype(np.int64)
    end = int(idx[-1])
    count = n if max_paths is None else min(n, int(max_paths))
    paths = np.empty((count, n_grid))
    for i in range(count):
        full = _record(cfg, int(tb["replicate"][i]), max(end, 1), result.n_max)
        paths[i] = full[idx] / cfg.t
    return ConditionedStats(tau, tb["Y_t"], y_over_rho, tb["overshoot"], tb["L"] / result.U,
                            tb["N_t"] / result.U, tb["weight"], tb["replicate"], lam, paths,
                            tau_cdf, alpha, gam, mu)


# ----------------------------------------------------------------------
# JSON
# ----------------------------------------------------------------------
_RUN_FIELDS = {"schema_version", "seq", "innov", "t", "horizon_factor", "replicates",
               "method", "seed", "min_conditioned", "path_mode", "u_mode"}
_METHOD_FIELDS = {"kind", "jump_window_eps", "tilt_threshold_theta", "mixture_weight"}
SCHEMA_VERSION = 1


def config_from_dict(obj: dict) -> SimConfig:
    """Parse a run configuration; unknown fields are rejected."""
    if not isinstance(obj, dict):
        raise InvalidSpecError("run config must be a JSON object")
    unknown = set(obj) - _RUN_FIELDS
    if unknown:
        raise InvalidSpecError(f"run: unknown field(s) {sorted(unknown)}")
    if obj.get("schema_version") != SCHEMA_VERSION:
        raise InvalidSpecError(f"run.schema_version must be {SCHEMA_VERSION}")
    for key in ("seq", "innov", "t", "replicates", "seed"):
        if key not in obj:
            raise InvalidSpecError(f"run: missing field {key!r}")
    method_obj = dict(obj.get("method", {"kind": "crude"}))
    unknown = set(method_obj) - _METHOD_FIELDS
    if unknown:
        raise InvalidSpecError(f"run.method: unknown field(s) {sorted(unknown)}")
    kind = method_obj.pop("kind", "crude")
    if kind == "crude":
        if method_obj:
            raise InvalidSpecError("run.method: crude takes no parameters")
        method = Crude()
    elif kind == "big_jump_is":
        method = BigJumpIS(**{k: float(v) for k, v in method_obj.items()})
    else:
        raise InvalidSpecError(f"run.method.kind: unknown value {kind!r}")
    try:
        return SimConfig(
            seq=sequence_from_dict(obj["seq"]), innov=innovation_from_dict(obj["innov"]),
            t=float(obj["t"]), horizon_factor=float(obj.get("horizon_factor", 50.0)),
            replicates=int(obj["replicates"]), method=method, seed=int(obj["seed"]),
            min_conditioned=int(obj.get("min_conditioned", 500)),
            path_mode=str(obj.get("path_mode", "auto")), u_mode=obj.get("u_mode"))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InvalidSpecError):
            raise
        raise InvalidSpecError(f"run: {exc}") from None


def config_to_dict(cfg: SimConfig) -> dict:
    if isinstance(cfg.method, BigJumpIS):
        m = cfg.method
        method = {"kind": "big_jump_is", "jump_window_eps": m.jump_window_eps,
                  "tilt_threshold_theta": m.tilt_threshold_theta,
                  "mixture_weight": m.mixture_weight}
    else:
        method = {"kind": "crude"}
    return {"schema_version": SCHEMA_VERSION, "seq": sequence_to_dict(cfg.seq),
            "innov": innovation_to_dict(cfg.innov), "t": cfg.t,
            "horizon_factor": cfg.horizon_factor, "replicates": int(cfg.replicates),
            "method": method, "seed": int(cfg.seed), "min_conditioned": cfg.min_conditioned,
            "path_mode": cfg.path_mode, "u_mode": cfg.u_mode}
