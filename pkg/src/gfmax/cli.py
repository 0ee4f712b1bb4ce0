"""Command-line front end.

Every output file carries a manifest: a ``"manifest"`` key in JSON, or a
first line ``# manifest: {...}`` in CSV. Floats in CSV are written with
``%.17g``.

Exit codes: 0 success, 2 malformed input or domain error, 3 regime error,
4 resource error or too few conditioned paths.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (DomainError, InsufficientSampleError, InvalidSpecError, RegimeError,
                     ResourceError)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INPUT = 2
EXIT_REGIME = 3
EXIT_RESOURCE = 4


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        obj = float(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InvalidSpecError(f"{path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InvalidSpecError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None


SCHEMA_VERSION = 1


def _load_config(path):
    obj = _load_json(path)
    if not isinstance(obj, dict):
        raise InvalidSpecError(f"{path}: expected a JSON object")
    if obj.get("schema_version") != SCHEMA_VERSION:
        raise InvalidSpecError(f"{path}: schema_version must be {SCHEMA_VERSION}")
    return obj


def _manifest(command, inputs, outputs, seed=None):
    canon = json.dumps(_jsonable(inputs), sort_keys=True, separators=(",", ":"))
    return {"command": command, "version": __version__, "seed": seed,
            "inputs": _jsonable(inputs), "outputs": list(outputs),
            "config_sha256": hashlib.sha256(canon.encode()).hexdigest()}


def _write_json(path, payload, manifest):
    body = dict(payload)
    body["manifest"] = manifest
    text = json.dumps(_jsonable(body), indent=2, sort_keys=True) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _write_csv(path, header, rows, manifest):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("# manifest: " + json.dumps(_jsonable(manifest), sort_keys=True) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def read_csv(path):
    """Read a CSV written by this tool; returns (manifest, header, rows of strings)."""
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
        if not first.startswith("# manifest: "):
            raise InvalidSpecError(f"{path}: missing manifest line")
        manifest = json.loads(first[len("# manifest: "):])
        reader = csv.reader(fh)
        header = next(reader)
        return manifest, header, list(reader)


# ----------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------
def cmd_coeffs(args):
    from .gseq import sequence_from_dict

    spec = _load_config(args.spec)
    seq = sequence_from_dict(spec)
    if args.n < 1:
        raise DomainError("--n must be at least 1")
    g = seq.coefficients(args.n)
    prefix = seq.prefix_array(args.n)
    rows = ((i, g[i], prefix[i + 1]) for i in range(args.n))
    _write_csv(args.out, ["n", "g_n", "g_prefix"], rows,
               _manifest("coeffs", {"spec": spec, "n": args.n}, [args.out]))


def cmd_rho(args):
    from .rho import rho_gamma, rho_integral

    if args.integral:
        payload = {"value": rho_integral(args.gamma, args.alpha), "minimizer": None,
                   "certified_gap": None}
    else:
        kv = rho_gamma(args.gamma, args.u)
        payload = {"value": kv.value, "minimizer": kv.minimizer, "certified_gap": kv.certified_gap}
    inputs = {"gamma": args.gamma, "alpha": args.alpha, "u": args.u, "integral": args.integral}
    _write_json(args.out, payload, _manifest("rho", inputs, [args.out or "-"]))


def cmd_psi_inverse(args):
    from .gseq import sequence_from_dict
    from .psi import make_context, psi_inverse

    spec = _load_config(args.spec)
    ctx = make_context(sequence_from_dict(spec), mu=args.mu)
    res = psi_inverse(ctx, args.n, args.t)
    payload = {"value": res.value, "k_index": res.k_index, "scan_bound": res.scan_bound}
    inputs = {"spec": spec, "n": args.n, "t": args.t, "mu": args.mu}
    _write_json(args.out, payload, _manifest("psi-inverse", inputs, [args.out or "-"]))


def _t_grid(text):
    parts = text.split(":")
    if len(parts) != 3:
        raise InvalidSpecError("--t-grid must be a:b:n")
    try:
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise InvalidSpecError("--t-grid must be a:b:n with numbers") from None
    if not (0 < a <= b and n >= 1):
        raise InvalidSpecError("--t-grid needs 0 < a <= b and n >= 1")
    return np.geomspace(a, b, n) if n > 1 else np.array([a])


def _seq_innov(args):
    from .gseq import sequence_from_dict
    from .tails import innovation_from_dict

    spec = _load_config(args.spec)
    innov = _load_config(args.innov)
    return spec, innov, sequence_from_dict(spec), innovation_from_dict(innov)


def cmd_tail(args):
    from .tails import asymptote

    spec, innov_obj, seq, innov = _seq_innov(args)
    asym = asymptote(seq, innov)
    grid = _t_grid(args.t_grid)
    values = np.atleast_1d(asym.evaluate(grid))
    rows = ((t, v, asym.regime.value, asym.constant) for t, v in zip(grid, values))
    inputs = {"spec": spec, "innov": innov_obj, "t_grid": args.t_grid}
    manifest = _manifest("tail", inputs, [args.out])
    manifest["formula"] = asym.formula()
    manifest["validity"] = asym.validity
    _write_csv(args.out, ["t", "asymptote", "regime", "constant"], rows, manifest)


def cmd_quantile(args):
    from .tails import asymptote, normalized_quantile, quantile_of_max

    spec, innov_obj, seq, innov = _seq_innov(args)
    asym = asymptote(seq, innov)
    payload = {"s": args.s, "quantile": quantile_of_max(asym, args.s),
               "normalized": normalized_quantile(asym, args.s), "regime": asym.regime.value,
               "constant": asym.constant}
    inputs = {"spec": spec, "innov": innov_obj, "s": args.s}
    _write_json(args.out, payload, _manifest("quantile", inputs, [args.out or "-"]))


def cmd_simulate(args):
    from . import mc

    obj = _load_config(args.config)
    cfg = mc.config_from_dict(obj)
    result = mc.estimate_tail(cfg, args.workers)
    outputs = [args.out] + ([args.paths] if args.paths else [])
    manifest = _manifest("simulate", {"config": obj}, outputs, seed=cfg.seed)
    payload = {"result": result.summary(),
               "conditioned_paths": {k: v for k, v in result.table.items()}}
    if args.paths:
        stats = mc.conditioned_statistics(result, args.workers)
        rows = ((int(rep), lam, s) for rep, path in zip(stats.replicate, stats.paths)
                for lam, s in zip(stats.lam, path))
        _write_csv(args.paths, ["replicate", "lambda", "S_scaled"], rows, manifest)
    _write_json(args.out, payload, manifest)


def cmd_limitlaw(args):
    from . import limitlaw

    s = limitlaw.sample_limit(args.gamma, args.alpha, args.mu, seed=args.seed, draws=args.draws)
    inputs = {"gamma": args.gamma, "alpha": args.alpha, "mu": args.mu, "draws": args.draws}
    outputs = [args.out] + [p for p in (args.path_grid, args.plot) if p]
    manifest = _manifest("limitlaw", inputs, outputs, seed=args.seed)
    rows = zip(s.tau, s.Y, s.M_lim, s.N_lim, s.L_lim)
    _write_csv(args.out, ["tau", "Y", "M_lim", "N_lim", "L_lim"], rows, manifest)
    if args.path_grid or args.plot:
        lam = np.linspace(0.0, args.lambda_max, args.grid_points)
        shown = np.arange(min(args.paths, len(s)))
        paths = s.paths(lam, shown)
        if args.path_grid:
            rows = ((int(i), x, v) for i, row in zip(shown, paths) for x, v in zip(lam, row))
            _write_csv(args.path_grid, ["draw", "lambda", "S"], rows, manifest)
        if args.plot:
            from .plotting import paths_plot

            paths_plot(lam, paths, args.plot)


def cmd_verify(args):
    from . import acceptance

    results = acceptance.run(args.tier, workers=args.workers, echo=print)
    print(acceptance.table(results))
    if args.out:
        payload = {"tier": args.tier, "criteria": [
            {"number": r.number, "name": r.name, "status": r.status, "detail": r.detail,
             "seconds": r.seconds} for r in results]}
        _write_json(args.out, payload, _manifest("verify", {"tier": args.tier}, [args.out]))
    if args.strict and any(r.passed is False for r in results):
        return EXIT_FAILED
    return EXIT_OK


def cmd_report(args):
    _, header, rows = read_csv(args.tail)
    try:
        t_col = header.index("t")
        a_col = header.index("asymptote")
    except ValueError:
        raise InvalidSpecError(f"{args.tail}: needs columns t and asymptote") from None
    grid = np.array([float(r[t_col]) for r in rows])
    asym = np.array([float(r[a_col]) for r in rows])
    order = np.argsort(grid)
    grid, asym = grid[order], asym[order]
    table = []
    for path in args.result:
        body = _load_json(path)
        try:
            res = body["result"]
            t = float(body["manifest"]["inputs"]["config"]["t"])
        except (KeyError, TypeError):
            raise InvalidSpecError(f"{path}: not a simulate result") from None
        if not grid[0] <= t <= grid[-1]:
            raise DomainError(f"{path}: t={t} lies outside the tail grid")
        a = float(np.exp(np.interp(np.log(t), np.log(grid), np.log(asym))))
        table.append((t, res["p_hat"], res["std_err"], a, res["p_hat"] / a))
    table.sort()
    outputs = [args.out] + ([args.plot] if args.plot else [])
    manifest = _manifest("report", {"tail": args.tail, "results": args.result}, outputs)
    _write_csv(args.out, ["t", "p_hat", "std_err", "asymptote", "ratio"], table, manifest)
    if args.plot:
        from .plotting import ratio_plot

        cols = np.array(table).T
        ratio_plot(cols[0], cols[1], cols[2], cols[3], args.plot)


# ----------------------------------------------------------------------
# parser
# ----------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gfmax", description="Tail asymptotics and simulation of "
                                "the maximum of (g,F)-processes.")
    p.add_argument("--version", action="version", version=f"gfmax {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("coeffs", help="coefficients and partial sums")
    s.add_argument("--spec", required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_coeffs)

    s = sub.add_parser("rho", help="kernel value or its integral")
    s.add_argument("--gamma", type=float, required=True)
    s.add_argument("--alpha", type=float, default=2.0)
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--u", type=float)
    g.add_argument("--integral", action="store_true")
    s.add_argument("--out")
    s.set_defaults(func=cmd_rho)

    s = sub.add_parser("psi-inverse", help="inverse envelope at (n, t)")
    s.add_argument("--spec", required=True)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--t", type=float, required=True)
    s.add_argument("--mu", type=float, default=-1.0)
    s.add_argument("--out")
    s.set_defaults(func=cmd_psi_inverse)

    s = sub.add_parser("tail", help="asymptote on a geometric t grid")
    s.add_argument("--spec", required=True)
    s.add_argument("--innov", required=True)
    s.add_argument("--t-grid", required=True, help="a:b:n, n geometric points in [a, b]")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_tail)

    s = sub.add_parser("quantile", help="asymptotic 1-1/s quantile of the maximum")
    s.add_argument("--spec", required=True)
    s.add_argument("--innov", required=True)
    s.add_argument("--s", type=float, required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_quantile)

    s = sub.add_parser("simulate", help="Monte Carlo estimate of P{M > t}")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--paths")
    s.add_argument("--workers", type=int)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("limitlaw", help="draws of the limit triple")
    s.add_argument("--gamma", type=float, required=True)
    s.add_argument("--alpha", type=float, required=True)
    s.add_argument("--mu", type=float, default=-1.0)
    s.add_argument("--draws", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--path-grid", help="CSV of sampled paths")
    s.add_argument("--plot", help="SVG of sampled paths")
    s.add_argument("--paths", type=int, default=20, help="number of paths in grid and plot")
    s.add_argument("--lambda-max", type=float, default=10.0)
    s.add_argument("--grid-points", type=int, default=200)
    s.set_defaults(func=cmd_limitlaw)

    s = sub.add_parser("verify", help="acceptance suite")
    s.add_argument("--tier", choices=("quick", "full"), default="quick")
    s.add_argument("--workers", type=int)
    s.add_argument("--out")
    s.add_argument("--strict", action="store_true", help="exit 1 if any criterion fails")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("report", help="ratio table and log-log plot")
    s.add_argument("--tail", required=True)
    s.add_argument("--result", required=True, nargs="+")
    s.add_argument("--out", required=True)
    s.add_argument("--plot")
    s.set_defaults(func=cmd_report)
    return p


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        code = args.func(args)
    except InsufficientSampleError as exc:
        print(f"gfmax: insufficient sample: {exc} (achieved {exc.achieved})", file=sys.stderr)
        return EXIT_RESOURCE
    except ResourceError as exc:
        print(f"gfmax: resource error: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except RegimeError as exc:
        print(f"gfmax: regime error: {exc}", file=sys.stderr)
        return EXIT_REGIME
    except (InvalidSpecError, DomainError) as exc:
        print(f"gfmax: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK if code is None else code


def main(argv=None):
    sys.exit(run(argv))
