"""Acceptance suite: exact kernel checks, Monte Carlo reproductions and determinism.

Each criterion returns a :class:`CriterionResult`. The quick tier runs the
analytic criteria and marks the Monte Carlo ones as skipped.
"""
from __future__ import annotations

import hashlib
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import special

from . import limitlaw, mc
from .errors import GfmaxError
from .gseq import ConstantOne, Const, Custom, Farima, GSequence, PowerLaw, PowerTail
from .psi import make_context, psi_forward, psi_inverse, vanishing_closed_form
from .rho import KernelParams, rho_integral, rho_values, xi, xi0_at_one
from .tails import (InnovationSpec, KaramataB, asymptote, karamata_integral,
                    normalized_quantile)

MC_CRITERIA = (5, 6, 7, 11)

# criterion 5
RW_ALPHA = 2.5
RW_T_GRID = (20.0, 40.0, 75.0)
RW_REPLICATES = 1_000_000
RW_HORIZON = 20.0
RW_SEED = 20240501
# criteria 6 and 7
DIV_ALPHA = 3.0
DIV_T = 4.0e4
DIV_REPLICATES = 300_000
DIV_HORIZON = 20.0
DIV_SEED = 20240502
DIV_METHOD = mc.BigJumpIS(jump_window_eps=0.1, tilt_threshold_theta=1.0, mixture_weight=0.3)
DIV_AS_WRITTEN = 0.078125
LIMIT_DRAWS = 100_000
LIMIT_SEED = 20240503
DETERMINISM_WORKERS = 8


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: Optional[bool]
    detail: str
    metrics: dict = field(default_factory=dict)
    seconds: float = 0.0

    @property
    def status(self) -> str:
        return "SKIP" if self.passed is None else ("PASS" if self.passed else "FAIL")

    def line(self) -> str:
        return f"criterion {self.number:2d} [{self.status}] {self.name}: {self.detail}"


@dataclass
class Context:
    """Shared Monte Carlo outputs so the determinism rerun can compare them."""

    workers: Optional[int] = None
    rw_results: dict = field(default_factory=dict)
    div_result: Optional[mc.SimResult] = None
    div_stats: Optional[mc.ConditionedStats] = None
    limit_overshoot: Optional[np.ndarray] = None


def _rel(a, b):
    if a == b:
        return 0.0
    return abs(a - b) / abs(b)


# ----------------------------------------------------------------------
# analytic criteria
# ----------------------------------------------------------------------
def criterion_1(ctx: Context) -> CriterionResult:
    u = np.linspace(0.0, 100.0, 2001)
    err1 = float(np.max(np.abs(rho_values(1.0, u) - (1.0 + u))))
    err2 = float(np.max(np.abs(rho_values(2.0, u) - (u + np.sqrt(2.0 + u * u)))))
    err_a0 = 0.0
    err_01 = 0.0
    for g in (1.5, 2.0, 3.0):
        for a in (0.25, 1.0, 2.0, float(special.gamma(1.0 + g)), 7.5):
            val = xi(KernelParams(gamma=g, a=a), 0.0).value
            exact = a ** (1.0 / g) * (g - 1.0) ** (1.0 / g - 1.0)
            err_a0 = max(err_a0, _rel(val, exact))
        val = xi(KernelParams(gamma=g, a=0.0), 1.0).value
        err_01 = max(err_01, _rel(val, xi0_at_one(g)))
    worst = max(err1, err2, err_a0, err_01)
    return CriterionResult(
        1, "kernel exactness", worst <= 1e-10,
        f"max|rho1-(1+u)|={err1:.2e}, max|rho2-closed|={err2:.2e}, "
        f"xi_a(0) rel={err_a0:.2e}, xi_0(1) rel={err_01:.2e} (tol 1e-10)",
        dict(rho1=err1, rho2=err2, xi_a0=err_a0, xi_01=err_01))


def criterion_2(ctx: Context) -> CriterionResult:
    rows = []
    ok = True
    for a in (2.5, 3.0, 4.0):
        val = rho_integral(2.0, a)
        stated = (3 * a + 1) / (2 ** (a + 1) * (a * a - 1))
        corrected = 2 ** (-(a + 1) / 2) * 2 * a / (a * a - 1)
        rel = _rel(val, stated)
        ok &= rel <= 1e-8
        rows.append(dict(alpha=a, value=val, stated=stated, rel_stated=rel,
                         rel_corrected=_rel(val, corrected)))
    detail = "; ".join(f"alpha={r['alpha']}: {r['value']:.10g} vs stated {r['stated']:.10g} "
                       f"(rel {r['rel_stated']:.2e}; vs 2^(-(a+1)/2)2a/(a^2-1) rel "
                       f"{r['rel_corrected']:.1e})" for r in rows)
    return CriterionResult(2, "integral constant", ok, detail, dict(rows=rows))


def _random_instance(rng):
    family = rng.integers(3)
    if family == 0:
        kind = Farima(d=float(rng.uniform(0.2, 2.5)))
    elif family == 1:
        kind = PowerLaw(gamma=float(rng.uniform(0.3, 2.5)),
                        slowly_varying=Const(float(rng.uniform(0.5, 2.0))))
    else:
        prefix = tuple(float(v) for v in np.round(rng.uniform(-1.0, 3.0, rng.integers(1, 6)), 3))
        kind = Custom(prefix=prefix, tail=PowerTail(scale=float(rng.uniform(0.5, 2.0)),
                                                    gamma=float(rng.uniform(0.3, 2.0))))
    seq = GSequence(kind)
    ctx = make_context(seq, search_horizon=4096)
    n = int(ctx.extremes.n0 + rng.integers(0, 200))
    t = 0.0 if rng.random() < 0.1 else float(10 ** rng.uniform(-1, 3))
    return ctx, n, t


def _brute_inverse(seq, n, t, K):
    g = seq.coefficients(K)
    G = seq.prefix_array(n + K)[n:n + K]
    obj = np.full(K, np.inf)
    pos = g > 0
    obj[pos] = (t + G[pos]) / g[pos]
    k = int(np.argmin(obj))
    return float(obj[k]), k


def criterion_3(ctx: Context, instances: int = 200, seed: int = 7) -> CriterionResult:
    rng = np.random.default_rng(seed)
    mismatches = 0
    worst_trip = 0.0
    for _ in range(instances):
        pctx, n, t = _random_instance(rng)
        res = psi_inverse(pctx, n, t)
        value, k = _brute_inverse(pctx.seq, n, t, 10 * res.scan_bound)
        if res.value != value or res.k_index != k:
            mismatches += 1
        if t > 0:
            back = psi_forward(pctx, n, res.value)
            worst_trip = max(worst_trip, abs(back - t) / t)
    closed_err = 0.0
    checked = 0
    for kind in (Farima(0.4), Farima(0.3), Custom(prefix=(1.0, 2.5, 0.5),
                                                  tail=PowerTail(scale=1.0, gamma=0.5))):
        pctx = make_context(GSequence(kind))
        for n in (pctx.extremes.n0, pctx.extremes.n0 + 5, 50, 400):
            t0, fn = vanishing_closed_form(pctx, n)
            for t in t0 + np.array([0.0, 1e-3, 0.5, 3.0, 40.0, 1e3]):
                closed_err = max(closed_err, _rel(psi_inverse(pctx, n, t).value, fn(t)))
                checked += 1
    ok = mismatches == 0 and worst_trip <= 1e-9 and closed_err <= 1e-12
    return CriterionResult(
        3, "Psi machinery", ok,
        f"{instances - mismatches}/{instances} exact brute-force matches, "
        f"max round-trip rel {worst_trip:.2e} (tol 1e-9), closed form on {checked} points "
        f"max rel {closed_err:.2e}",
        dict(mismatches=mismatches, round_trip=worst_trip, closed_form=closed_err))


def criterion_4(ctx: Context) -> CriterionResult:
    seq = GSequence(Farima(2.0))
    pctx = make_context(seq)
    t = 1e6
    U = float(seq.scale_U(t, "asymptotic"))
    rows = []
    for x in (0.5, 1.0, 2.0):
        n = int(math.floor(x * U))
        ratio = psi_inverse(pctx, n, t).value / U
        target = float(rho_values(2.0, x))
        rows.append((x, ratio, target, abs(ratio / target - 1.0)))
    ok = all(r[3] <= 0.05 for r in rows)
    return CriterionResult(
        4, "asymptotic inverse", ok,
        ", ".join(f"x={x}: {r:.5f} vs {tg:.5f} ({d:.2%})" for x, r, tg, d in rows) + " (tol 5%)",
        dict(rows=rows))


def criterion_8(ctx: Context) -> CriterionResult:
    min_excess = math.inf
    for g, a in ((1.0, 2.5), (1.5, 2.5), (2.0, 3.0), (3.0, 3.0)):
        s = limitlaw.sample_limit(g, a, -1.0, seed=LIMIT_SEED, draws=LIMIT_DRAWS)
        min_excess = min(min_excess, float(np.min(s.M_lim - 1.0)))
    s = limitlaw.sample_limit(2.0, 3.0, -1.0, seed=LIMIT_SEED + 1, draws=LIMIT_DRAWS)
    R = s.rho_tau * s.Y
    joint_err = 0.0
    for u in (0.25, 0.5, 1.0, 2.0, 4.0):
        for y in (1.0, 1.5, 2.0, 3.0, 5.0, 10.0):
            emp = float(np.mean((s.tau <= u) & (R > y)))
            joint_err = max(joint_err, abs(emp - limitlaw.joint_cdf(2.0, 3.0, u, y)))
    tr = limitlaw.make_triple(2.0, 0.0, 1.0)
    forced = max(abs(tr.M_lim - 1.0), abs(tr.N_lim - math.sqrt(2)), abs(tr.L_lim - math.sqrt(2)))
    ok = min_excess >= -1e-9 and joint_err <= 0.01 and forced <= 1e-8
    return CriterionResult(
        8, "limit-law consistency", ok,
        f"min(M-1)={min_excess:.3e} (>= -1e-9), joint-law max err {joint_err:.4f} (tol 0.01), "
        f"forced (1,sqrt2,sqrt2) err {forced:.1e}",
        dict(min_excess=min_excess, joint_err=joint_err, forced=forced))


def criterion_9(ctx: Context) -> CriterionResult:
    innov = InnovationSpec(alpha=3.0, mu=-1.0)
    a1 = asymptote(GSequence(Farima(2.0)), innov)
    a2 = asymptote(GSequence(Farima(4.0)), innov)
    grid = (1e2, 1e3, 1e4, 1e5, 1e6)
    ratios = [normalized_quantile(a2, s) / normalized_quantile(a1, s) ** 2 for s in grid]
    dev = [abs(r - 1.0) for r in ratios]
    trend = dev[-1] <= dev[0] + 1e-12
    ok = 0.9 <= ratios[-1] <= 1.1 and trend
    return CriterionResult(
        9, "quantile morphism", ok,
        ", ".join(f"s=1e{int(math.log10(s))}: {r:.12f}" for s, r in zip(grid, ratios)),
        dict(ratios=ratios))


def criterion_10(ctx: Context) -> CriterionResult:
    innov = InnovationSpec(alpha=2.0, mu=-1.0)
    rows = [(beta, karamata_integral(KaramataB(beta), innov, 1e4).ratio) for beta in (1.0, 2.0)]
    ok = all(abs(r - 1.0) <= 0.1 for _, r in rows)
    return CriterionResult(
        10, "Karamata-type integral", ok,
        ", ".join(f"b=u^{int(b)}: ratio {r:.10f}" for b, r in rows) + " at t=1e4 (tol 10%)",
        dict(rows=rows))


# ----------------------------------------------------------------------
# Monte Carlo criteria
# ----------------------------------------------------------------------
def rw_config(t: float) -> mc.SimConfig:
    return mc.SimConfig(GSequence(ConstantOne()), InnovationSpec(alpha=RW_ALPHA, mu=-1.0),
                        t=t, horizon_factor=RW_HORIZON, replicates=RW_REPLICATES, seed=RW_SEED)


def div_config() -> mc.SimConfig:
    return mc.SimConfig(GSequence(Farima(2.0)), InnovationSpec(alpha=DIV_ALPHA, mu=-1.0),
                        t=DIV_T, horizon_factor=DIV_HORIZON, replicates=DIV_REPLICATES,
                        method=DIV_METHOD, seed=DIV_SEED, min_conditioned=2000)


def _run_rw(workers):
    return {t: mc.estimate_tail(rw_config(t), workers) for t in RW_T_GRID}


def _run_div(workers):
    result = mc.estimate_tail(div_config(), workers)
    stats = mc.conditioned_statistics(result)
    return result, stats


def criterion_5(ctx: Context) -> CriterionResult:
    ctx.rw_results = _run_rw(ctx.workers)
    rows = []
    for t, res in ctx.rw_results.items():
        A = asymptote(res.config.seq, res.config.innov).evaluate(t)
        p2, se2 = res.horizon_bias_diag[1], res.std_err_2n
        rows.append(dict(t=t, p_hat=res.p_hat, std_err=res.std_err, asymptote=A,
                         ratio=res.p_hat / A, horizon_gap=p2 - res.p_hat))
    ratios = [r["ratio"] for r in rows]
    in_band = all(1e-3 <= r["asymptote"] <= 1e-2 for r in rows)
    ok = in_band and all(0.8 <= r <= 1.2 for r in ratios) and abs(ratios[-1] - 1) < abs(ratios[0] - 1)
    return CriterionResult(
        5, "random-walk reproduction", ok,
        ", ".join(f"t={r['t']:g}: {r['p_hat']:.4e}+-{r['std_err']:.1e} / {r['asymptote']:.4e} "
                  f"= {r['ratio']:.3f}" for r in rows) + " (band [0.8,1.2], trend to 1)",
        dict(rows=rows))


def criterion_6(ctx: Context) -> CriterionResult:
    if ctx.div_result is None:
        ctx.div_result, ctx.div_stats = _run_div(ctx.workers)
    res = ctx.div_result
    cfg = res.config
    t = cfg.t
    stated = DIV_AS_WRITTEN * math.sqrt(t) * float(cfg.innov.tail(math.sqrt(t)))
    implemented = asymptote(cfg.seq, cfg.innov).evaluate(t)
    ratio = res.p_hat / stated
    ratio_impl = res.p_hat / implemented
    ess = res.p_hat * (1 - res.p_hat) / res.std_err ** 2 if res.std_err > 0 else 0.0
    ok = 0.7 <= ratio <= 1.3 and ess >= 1e5 and res.replicates_used >= 1e5
    return CriterionResult(
        6, "diverging-regime reproduction", ok,
        f"t={t:g}: p_hat={res.p_hat:.4e}+-{res.std_err:.1e}; ratio to 0.078125*sqrt(t)Fbar(sqrt(t)) "
        f"= {ratio:.3f} (band [0.7,1.3]); ratio to rho_integral-based asymptote "
        f"{implemented:.4e} = {ratio_impl:.3f}; effective replicates {ess:.3g}",
        dict(p_hat=res.p_hat, std_err=res.std_err, ratio=ratio, ratio_implemented=ratio_impl,
             effective_replicates=ess))


def criterion_7(ctx: Context) -> CriterionResult:
    if ctx.div_result is None:
        ctx.div_result, ctx.div_stats = _run_div(ctx.workers)
    cs = ctx.div_stats
    if ctx.limit_overshoot is None:
        draws = limitlaw.sample_limit(2.0, DIV_ALPHA, -1.0, seed=LIMIT_SEED, draws=LIMIT_DRAWS)
        ctx.limit_overshoot = draws.M_lim - 1.0
    n = cs.tau.size
    ks_tau = cs.ks_tau()
    ks_over = cs.ks_overshoot(ctx.limit_overshoot)
    ok = n >= 2000 and ks_tau <= 0.1 and ks_over <= 0.15
    return CriterionResult(
        7, "trajectory law", ok,
        f"{n} conditioned paths; KS(tau)={ks_tau:.4f} (tol 0.1), "
        f"KS(overshoot vs M-1)={ks_over:.4f} (tol 0.15)",
        dict(n=n, ks_tau=ks_tau, ks_overshoot=ks_over))


def _digest_rw(results):
    h = hashlib.sha256()
    for t in sorted(results):
        r = results[t]
        h.update(np.float64([r.p_hat, r.std_err, *r.horizon_bias_diag]).tobytes())
        for key in sorted(r.table):
            h.update(np.ascontiguousarray(r.table[key]).tobytes())
    return h.hexdigest()


def _digest_div(result, stats):
    h = hashlib.sha256(_digest_rw({0: result}).encode())
    h.update(np.ascontiguousarray(stats.paths).tobytes())
    h.update(np.float64([stats.ks_tau()]).tobytes())
    return h.hexdigest()


def criterion_11(ctx: Context) -> CriterionResult:
    if not ctx.rw_results:
        ctx.rw_results = _run_rw(1)
    if ctx.div_result is None:
        ctx.div_result, ctx.div_stats = _run_div(1)
    base_rw = _digest_rw(ctx.rw_results)
    base_div = _digest_div(ctx.div_result, ctx.div_stats)
    rerun_rw = _digest_rw(_run_rw(DETERMINISM_WORKERS))
    res, stats = _run_div(DETERMINISM_WORKERS)
    rerun_div = _digest_div(res, stats)
    ok = base_rw == rerun_rw and base_div == rerun_div
    return CriterionResult(
        11, "determinism", ok,
        f"criteria 5-7 outputs sha256 {base_rw[:12]}/{base_div[:12]} with {ctx.workers or 1} "
        f"worker(s) vs {rerun_rw[:12]}/{rerun_div[:12]} with {DETERMINISM_WORKERS}",
        dict(rw=(base_rw, rerun_rw), div=(base_div, rerun_div)))


CRITERIA: dict[int, Callable[[Context], CriterionResult]] = {
    1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
    6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9, 10: criterion_10,
    11: criterion_11,
}
NAMES = {1: "kernel exactness", 2: "integral constant", 3: "Psi machinery",
         4: "asymptotic inverse", 5: "random-walk reproduction",
         6: "diverging-regime reproduction", 7: "trajectory law", 8: "limit-law consistency",
         9: "quantile morphism", 10: "Karamata-type integral", 11: "determinism"}


def run_criterion(number: int, ctx: Context) -> CriterionResult:
    start = time.perf_counter()
    try:
        result = CRITERIA[number](ctx)
    except GfmaxError as exc:
        result = CriterionResult(number, NAMES[number], False, f"error: {exc}")
    result.seconds = time.perf_counter() - start
    return result


def run(tier: str = "quick", workers: Optional[int] = None, criteria=None, echo=None):
    """Run the suite and return the list of results.

    Parameters
    ----------
    tier : {"quick", "full"}
        The quick tier skips the Monte Carlo criteria.
    echo : callable, optional
        Called with each result line as soon as it is available.
    """
    if tier not in ("quick", "full"):
        raise ValueError("tier must be quick or full")
    ctx = Context(workers=mc.resolve_workers(workers))
    out = []
    for number in (criteria or sorted(CRITERIA)):
        if tier == "quick" and number in MC_CRITERIA:
            res = CriterionResult(number, NAMES[number], None, "Monte Carlo, full tier only")
        else:
            res = run_criterion(number, ctx)
        out.append(res)
        if echo is not None:
            echo(res.line())
    return out


def table(results) -> str:
    """Fixed-width pass/fail table."""
    lines = [f"{'#':>3}  {'status':<6}  {'seconds':>8}  criterion"]
    for r in results:
        lines.append(f"{r.number:>3}  {r.status:<6}  {r.seconds:>8.1f}  {r.name}")
    return "\n".join(lines)
