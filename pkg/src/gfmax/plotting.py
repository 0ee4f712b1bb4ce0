"""Static SVG figures for tail tables and limit paths."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib as mpl  # noqa: E402
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "figure.figsize": (5.0, 3.6),
    "axes.grid": True,
    "grid.linestyle": ":",
    "grid.alpha": 0.6,
    "axes.labelsize": 10,
    "xtick.direction": "in",
    "ytick.direction": "in",
    "legend.fontsize": 8,
    "lines.linewidth": 1.2,
    "lines.markersize": 4,
    # byte-stable output
    "svg.hashsalt": "gfmax",
    "svg.fonttype": "path",
}


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def ratio_plot(t, estimate, std_err, asymptote, path):
    """Log-log plot of estimates with 2-sigma bars against the asymptote."""
    t = np.asarray(t, dtype=float)
    est = np.asarray(estimate, dtype=float)
    se = np.asarray(std_err, dtype=float)
    asym = np.asarray(asymptote, dtype=float)
    with mpl.rc_context(STYLE):
        fig, ax = plt.subplots()
        order = np.argsort(t)
        ax.plot(t[order], asym[order], "-", color="0.3", label="asymptote")
        lower = np.minimum(2 * se, est * (1 - 1e-12))
        ax.errorbar(t, est, yerr=[lower, 2 * se], fmt="o", color="C0", capsize=2,
                    label="Monte Carlo")
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("t")
        ax.set_ylabel("P{M > t}")
        ax.legend()
        fig.tight_layout()
        _save(fig, path)


def paths_plot(lam, paths, path, level=1.0, max_paths=30):
    """Overlay of sampled limit paths with the crossing level."""
    lam = np.asarray(lam, dtype=float)
    paths = np.atleast_2d(np.asarray(paths, dtype=float))
    with mpl.rc_context(STYLE):
        fig, ax = plt.subplots()
        for row in paths[:max_paths]:
            ax.plot(lam, row, "-", color="C0", alpha=0.5, linewidth=0.8)
        ax.axhline(level, color="C3", linestyle="--", linewidth=0.8)
        ax.set_xlabel("lambda")
        ax.set_ylabel("S(lambda)")
        fig.tight_layout()
        _save(fig, path)
