"""Static figures for experiment results, written next to the tables."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
}


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_trajectory(traj, path, title=None):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(3.4, 3.4))
        pts = traj.points
        if pts.shape[1] == 1:
            ax.plot(traj.times, pts[:, 0], lw=0.5, color="k")
            ax.set_xlabel("t")
            ax.set_ylabel("w")
        else:
            ax.plot(pts[:, 0], pts[:, 1], lw=0.3, color="k")
            ax.set_xlabel("w0")
            ax.set_ylabel("w1")
            ax.set_aspect("equal", adjustable="datalim")
        if title:
            ax.set_title(title)
        return _save(fig, path)


def plot_dimension(result, path):
    """Log-log box counts for one run per alpha, and mean slope against alpha."""
    with plt.rc_context(STYLE):
        fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(7, 3.2))
        cmap = plt.get_cmap("viridis")
        examples = result.artifacts.get("examples", {})
        for i, (alpha, est) in enumerate(sorted(examples.items())):
            c = cmap(i / max(1, len(examples) - 1))
            x, y = np.log2(1 / est.scales), np.log2(est.counts)
            ax0.plot(x, y, "o-", ms=2, lw=0.8, color=c, label=f"alpha={alpha:g}")
            ax0.plot(x[est.used], y[est.used], "o", ms=4, mfc="none", color=c)
        ax0.set_xlabel("log2(1/delta)")
        ax0.set_ylabel("log2 N_delta")
        ax0.legend(frameon=False)

        s = result.summary
        a = np.array([r["alpha"] for r in s])
        ax1.errorbar(a, [r["mean_slope"] for r in s], yerr=[r["std_slope"] for r in s],
                     fmt="o", color="k", capsize=2)
        lo, hi = a.min() - 0.1, a.max() + 0.1
        ax1.plot([lo, hi], [lo, hi], ls="--", lw=0.8, color="grey")
        ax1.set_xlabel("tail index alpha")
        ax1.set_ylabel("box-counting slope")
        return _save(fig, path)


def plot_synth_gap(result, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(3.6, 3.0))
        alphas = sorted({r["alpha"] for r in result.summary})
        cmap = plt.get_cmap("plasma")
        for i, a in enumerate(alphas):
            rs = [r for r in result.summary if r["alpha"] == a]
            ax.errorbar([r["n"] for r in rs], [r["mean_gap"] for r in rs], yerr=[r["std_gap"] for r in rs],
                        marker="o", ms=3, capsize=2, color=cmap(i / max(1, len(alphas))), label=f"alpha={a:g}")
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("n")
        ax.set_ylabel("generalization gap")
        ax.legend(frameon=False)
        return _save(fig, path)


def plot_mlp_gap(result, path):
    with plt.rc_context(STYLE):
        fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(7, 3.0), sharey=True)
        depths = sorted({r["depth"] for r in result.rows})
        markers = "os^Dv<>"
        for i, dp in enumerate(depths):
            rs = [r for r in result.rows if r["depth"] == dp]
            m = markers[i % len(markers)]
            ax0.scatter([r["beta_s"] for r in rs], [r["gap"] for r in rs], marker=m, s=18, label=f"depth {dp}")
            ax1.scatter([r["eta_over_b"] for r in rs], [r["gap"] for r in rs], marker=m, s=18)
        ax0.set_xlabel("beta_S")
        ax0.set_ylabel("train acc - test acc")
        ax0.legend(frameon=False)
        ax1.set_xscale("log")
        ax1.set_xlabel("eta / B")
        if result.summary:
            ax0.set_title(f"Spearman {result.summary[0]['spearman_beta_gap']:.2f}")
        return _save(fig, path)


def plot_tailindex(result, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(3.6, 3.0))
        groups = [r["group"] for r in result.summary]
        data = [[r["alpha_hat"] for r in result.rows if r["group"] == g] for g in groups]
        ax.boxplot(data, labels=groups)
        for i, r in enumerate(result.summary, start=1):
            ax.plot([i - 0.3, i + 0.3], [r["true_alpha"]] * 2, color="r", lw=1)
        ax.set_ylabel("estimated tail index")
        return _save(fig, path)


def plot_bound(result, path):
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(3.6, 3.0))
        key = result.columns[0]
        x = [r[key] for r in result.rows]
        for col in ("theorem1", "theorem2", "chaining"):
            y = np.array([r[col] for r in result.rows], dtype=float)
            if np.any(np.isfinite(y)):
                ax.plot(x, y, "o-", ms=3, label=col)
        ax.set_xlabel(key)
        ax.set_ylabel("bound")
        ax.legend(frameon=False)
        return _save(fig, path)


PLOTTERS = {
    "dimension": plot_dimension,
    "synth-gap": plot_synth_gap,
    "mlp-gap": plot_mlp_gap,
    "tailindex": plot_tailindex,
    "bound": plot_bound,
}


def render(result, out_dir):
    """Write the figure(s) for ``result`` into ``out_dir``; returns the paths."""
    paths = []
    if result.kind in PLOTTERS and result.rows:
        paths.append(PLOTTERS[result.kind](result, out_dir / f"{result.kind}.png"))
    if result.kind == "simulate":
        for rep, traj in sorted(result.artifacts.get("trajectories", {}).items())[:4]:
            paths.append(plot_trajectory(traj, out_dir / f"trajectory_{rep}.png"))
    return paths
