"""Desk-scale experiment runners.

Each runner takes a validated :class:`~fractalgen.config.ExperimentConfig`
and returns a :class:`RunResult` whose rows are sorted, so output does not
depend on scheduling. Tasks draw randomness only from
``task_rng(seed, <task path>)``.
"""

from __future__ import annotations

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.stats import spearmanr

from . import bounds as bnd
from .config import ExperimentConfig, task_rng
from .fractal import FitWindow, estimate_dimension
from .learning import MLP, Dataset, gen_mixture_dataset
from .processes import DrivingSpec, SimulationError, run_sgd, simulate_levy, simulate_sde
from .stable import MultivariateStableSpec
from .tail_index import estimate_beta

logger = logging.getLogger(__name__)

__all__ = [
    "RunResult",
    "run_experiment",
    "run_simulate",
    "run_dimension",
    "run_tailindex",
    "run_synth_gap",
    "run_mlp_gap",
    "run_bound",
    "gap_paths",
]


@dataclass
class RunResult:
    kind: str
    columns: list
    rows: list
    summary_columns: list = field(default_factory=list)
    summary: list = field(default_factory=list)
    partial: bool = False
    notes: dict = field(default_factory=dict)
    artifacts: dict = field(default_factory=dict)


class _Aborted(Exception):
    pass


def _run_tasks(tasks, fn, threads=1, deadline=None):
    """Run ``fn(task)`` for every task; returns (results in task order, partial).

    Tasks not started before ``deadline`` (a ``time.monotonic`` value) are
    skipped. A task raising :class:`SimulationError` is logged and skipped.
    Skipped tasks yield ``None``.
    """
    partial = False

    def guarded(task):
        if deadline is not None and time.monotonic() > deadline:
            raise _Aborted()
        return fn(task)

    def collect(t, call):
        nonlocal partial
        try:
            return call()
        except (_Aborted, SimulationError) as exc:
            if isinstance(exc, SimulationError):
                logger.error("task %r failed: %s", t, exc)
            partial = True
            return None

    tasks = list(tasks)
    if threads <= 1:
        return [collect(t, lambda t=t: guarded(t)) for t in tasks], partial
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(guarded, t) for t in tasks]
        results = [collect(t, f.result) for t, f in zip(tasks, futures)]
    return results, partial


def _deadline(cfg: ExperimentConfig):
    return None if cfg.time_budget is None else time.monotonic() + cfg.time_budget


def _stable_spec(p: dict) -> MultivariateStableSpec:
    if p["family"] == "independent":
        return MultivariateStableSpec.independent(p["alphas"])
    return MultivariateStableSpec.elliptic(p["alpha"], p["dim"])


def run_simulate(cfg: ExperimentConfig, threads: int = 1) -> RunResult:
    p = cfg.params
    spec = _stable_spec(p)

    def task(rep):
        rng = task_rng(cfg.seed, "simulate", rep)
        if p["process"] == "levy":
            traj = simulate_levy(spec, p["horizon"], p["step"], rng, seed=cfg.seed)
        else:
            grad = (lambda w: w) if p["drift"] == "quadratic" else None
            driving = DrivingSpec(spec, grad=grad, gaussian_coeff=p["gaussian_coeff"] or None,
                                  stable_coeff=p["stable_coeff"] or None)
            w0 = np.zeros(p["dim"]) if p["initial"] is None else np.asarray(p["initial"], float)
            traj = simulate_sde(driving, w0, p["horizon"], p["step"], rng, cap=p["cap"], seed=cfg.seed)
        norms = np.linalg.norm(traj.points, axis=1)
        row = {"rep": rep, "process": p["process"], "family": spec.kind, "alpha": spec.alpha,
               "dim": spec.dim, "points": len(traj), "final_norm": float(norms[-1]),
               "max_norm": float(norms.max()), "truncated": int(traj.truncated)}
        return row, traj

    out, partial = _run_tasks(range(cfg.repetitions), task, threads, _deadline(cfg))
    rows = [o[0] for o in out if o is not None]
    trajs = {o[0]["rep"]: o[1] for o in out if o is not None}
    cols = ["rep", "process", "family", "alpha", "dim", "points", "final_norm", "max_norm", "truncated"]
    return RunResult("simulate", cols, rows, partial=partial, artifacts={"trajectories": trajs})


def run_dimension(cfg: ExperimentConfig, threads: int = 1) -> RunResult:
    """Box-counting dimension of simulated elliptic Levy motions across tail indices."""
    p = cfg.params
    window = FitWindow(p["min_count"], p["max_fraction"], p["min_scales"])
    tasks = [(float(a), rep) for a in p["alphas"] for rep in range(cfg.repetitions)]

    def task(t):
        alpha, rep = t
        rng = task_rng(cfg.seed, "dimension", rep, alpha)
        spec = MultivariateStableSpec.elliptic(alpha, p["dim"])
        steps = p["points"] - 1
        traj = simulate_levy(spec, 1.0, 1.0 / steps, rng)
        est = estimate_dimension(traj, p["scale_count"], window)
        row = {"alpha": alpha, "rep": rep, "slope": est.slope, "raw_slope": est.raw_slope,
               "r_squared": est.r_squared, "scales_used": int(est.used.sum()),
               "window_ok": int(est.window_ok)}
        return row, est

    out, partial = _run_tasks(tasks, task, threads, _deadline(cfg))
    rows = sorted((o[0] for o in out if o), key=lambda r: (r["alpha"], r["rep"]))
    examples = {o[0]["alpha"]: o[1] for o in out if o and o[0]["rep"] == 0}
    summary = []
    for a in sorted({r["alpha"] for r in rows}):
        s = np.array([r["slope"] for r in rows if r["alpha"] == a])
        summary.append({"alpha": a, "reps": len(s), "mean_slope": float(s.mean()),
                        "std_slope": float(s.std()), "min_slope": float(s.min()),
                        "max_slope": float(s.max())})
    means = [r["mean_slope"] for r in summary]
    increasing = bool(np.all(np.diff(means) > 0))
    return RunResult(
        "dimension",
        ["alpha", "rep", "slope", "raw_slope", "r_squared", "scales_used", "window_ok"],
        rows,
        ["alpha", "reps", "mean_slope", "std_slope", "min_slope", "max_slope"],
        summary,
        partial,
        notes={"mean_slope_increasing": increasing},
        artifacts={"examples": examples},
    )


def run_tailindex(cfg: ExperimentConfig, threads: int = 1) -> RunResult:
    """Recover per-group indices from a pure-noise Levy motion with independent components."""
    p = cfg.params
    alphas = [float(a) for a in p["group_alphas"]]
    m = p["coords_per_group"]
    coord_alphas = np.repeat(alphas, m)
    group_map = [f"group{g}" for g in range(len(alphas)) for _ in range(m)]
    spec = MultivariateStableSpec.independent(coord_alphas)
    k1 = p["k1"] if p["k1"] is not None else None

    def task(rep):
        rng = task_rng(cfg.seed, "tailindex", rep)
        traj = simulate_levy(spec, 1.0, 1.0 / p["steps"], rng)
        kwargs = {"scale": p["scale"]}
        if k1 is not None:
            kwargs["k1_policy"] = int(k1)
        report = estimate_beta(traj, group_map, **kwargs)
        rows = [{"rep": rep, "group": g, "true_alpha": a, "alpha_hat": float(ah), "samples": int(k)}
                for g, a, ah, k in zip(report.group_names, alphas, report.alpha_hats, report.sample_counts)]
        rows.append({"rep": rep, "group": "beta_S", "true_alpha": max(alphas),
                     "alpha_hat": report.beta_s, "samples": int(report.sample_counts.sum())})
        return rows

    out, partial = _run_tasks(range(cfg.repetitions), task, threads, _deadline(cfg))
    rows = sorted((r for o in out if o for r in o), key=lambda r: (r["group"], r["rep"]))
    summary = []
    for g in dict.fromkeys(r["group"] for r in rows):
        a = np.array([r["alpha_hat"] for r in rows if r["group"] == g])
        true = next(r["true_alpha"] for r in rows if r["group"] == g)
        summary.append({"group": g, "true_alpha": true, "reps": len(a), "mean_alpha_hat": float(a.mean()),
                        "std_alpha_hat": float(a.std()), "mean_abs_error": float(np.mean(np.abs(a - true)))})
    return RunResult("tailindex", ["group", "rep", "true_alpha", "alpha_hat", "samples"], rows,
                     ["group", "true_alpha", "reps", "mean_alpha_hat", "std_alpha_hat", "mean_abs_error"],
                     summary, partial)


def gap_paths(points, population: Dataset, subsets, chunk: int = 10_000):
    """Empirical and population risk paths for many training subsets at once.

    ``subsets`` is a list of index arrays into ``population``. Returns
    ``(pop_path, emp_paths)`` with shapes ``(T,)`` and ``(len(subsets), T)``.
    Losses are formed ``chunk`` population rows at a time, and subset means
    come from a sparse selection matrix, so memory stays at ``chunk * T``.
    A subset covering the whole population gets exactly the population path.
    """
    W = np.asarray(points, dtype=float)
    N = len(population)
    Z = population.features * population.labels[:, None]
    rows, cols, vals = [], [], []
    for i, idx in enumerate(subsets):
        idx = np.asarray(idx)
        rows.append(np.full(idx.size, i))
        cols.append(idx)
        vals.append(np.full(idx.size, 1.0 / idx.size))
    sel = sp.csc_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                        shape=(len(subsets), N))
    pop_sum = np.zeros(len(W))
    emp = np.zeros((len(subsets), len(W)))
    for start in range(0, N, chunk):
        stop = min(N, start + chunk)
        losses = np.logaddexp(0.0, -(Z[start:stop] @ W.T))
        pop_sum += losses.sum(axis=0)
        block = sel[:, start:stop]
        if block.nnz:
            emp += block.tocsr() @ losses
    pop = pop_sum / N
    for i, idx in enumerate(subsets):
        if len(idx) == N:
            emp[i] = pop
    return pop, emp


def run_synth_gap(cfg: ExperimentConfig, threads: int = 1) -> RunResult:
    """Generalization gap of data-independent stable trajectories on a logistic task.

    The population is drawn once per config. In every repetition the same
    training subsets are used for all tail indices, and each (repetition,
    alpha) gets its own elliptic Levy trajectory on ``[0, horizon]``.
    """
    p = cfg.params
    population = gen_mixture_dataset(p["dim"], p["population"], task_rng(cfg.seed, "population"))
    ns = [int(n) for n in p["ns"]]
    tasks = [(rep, float(a)) for rep in range(cfg.repetitions) for a in p["alphas"]]

    def subsets_for(rep):
        out = []
        for n in ns:
            rng = task_rng(cfg.seed, "subsets", rep, n)
            out.extend(rng.choice(p["population"], size=n, replace=False) for _ in range(p["subsets"]))
        return out

    def task(t):
        rep, alpha = t
        spec = MultivariateStableSpec.elliptic(alpha, p["dim"])
        traj = simulate_levy(spec, p["horizon"], p["step"], task_rng(cfg.seed, "trajectory", rep, alpha))
        pop, emp = gap_paths(traj.points, population, subsets_for(rep), p["chunk"])
        gaps = np.max(np.abs(emp - pop[None, :]), axis=1).reshape(len(ns), p["subsets"])
        max_norm = float(np.linalg.norm(traj.points, axis=1).max())
        return [{"alpha": alpha, "n": n, "rep": rep, "gap": float(g.mean()), "gap_std": float(g.std()),
                 "max_norm": max_norm} for n, g in zip(ns, gaps)]

    out, partial = _run_tasks(tasks, task, threads, _deadline(cfg))
    rows = sorted((r for o in out if o for r in o), key=lambda r: (r["alpha"], r["n"], r["rep"]))
    summary = []
    for a in sorted({r["alpha"] for r in rows}):
        for n in ns:
            g = np.array([r["gap"] for r in rows if r["alpha"] == a and r["n"] == n])
            if g.size:
                summary.append({"alpha": a, "n": n, "reps": g.size, "mean_gap": float(g.mean()),
                                "std_gap": float(g.std()), "median_gap": float(np.median(g))})
    return RunResult("synth-gap", ["alpha", "n", "rep", "gap", "gap_std", "max_norm"], rows,
                     ["alpha", "n", "reps", "mean_gap", "std_gap", "median_gap"], summary, partial,
                     notes=_gap_trends(summary))


def _gap_trends(summary) -> dict:
    alphas = sorted({r["alpha"] for r in summary})
    ns = sorted({r["n"] for r in summary})
    table = {(r["alpha"], r["n"]): r["mean_gap"] for r in summary}
    inc_alpha = all(np.all(np.diff([table[(a, n)] for a in alphas]) > 0)
                    for n in ns if all((a, n) in table for a in alphas))
    dec_n = all(np.all(np.diff([table[(a, n)] for n in ns]) < 0)
                for a in alphas if all((a, n) in table for n in ns))
    return {"increasing_in_alpha": bool(inc_alpha), "decreasing_in_n": bool(dec_n)}


def run_mlp_gap(cfg: ExperimentConfig, threads: int = 1) -> RunResult:
    """Train MLPs over a (depth, eta, batch) grid and relate beta_S to the accuracy gap.

    Features are standardized with training-set statistics. beta_S is
    estimated from the iterates of the last ``window_epochs`` epochs.
    """
    p = cfg.params
    full = gen_mixture_dataset(p["dim"], p["n_train"] + p["n_test"], task_rng(cfg.seed, "data"))
    X = full.features
    mu, sd = X[: p["n_train"]].mean(axis=0), X[: p["n_train"]].std(axis=0)
    X = (X - mu) / np.where(sd > 0, sd, 1.0)
    train = Dataset(X[: p["n_train"]], full.labels[: p["n_train"]], full.provenance)
    test = Dataset(X[p["n_train"]:], full.labels[p["n_train"]:], full.provenance)
    tasks = [(int(dp), float(eta), int(b), rep) for dp in p["depths"] for eta in p["etas"]
             for b in p["batches"] for rep in range(cfg.repetitions)]

    def task(t):
        depth, eta, batch, rep = t
        net = MLP((p["dim"],) + (p["width"],) * depth + (1,))
        steps_per_epoch = max(1, p["n_train"] // batch)
        start = (p["epochs"] - p["window_epochs"]) * steps_per_epoch
        rng = task_rng(cfg.seed, "mlp", depth, eta, batch, rep)
        traj = run_sgd(net, train, eta, batch, p["epochs"], rng, record_from=start)
        w = traj.points[-1]
        # the recorded window starts at the iterate that opens it
        window = (1, len(traj)) if start > 0 else (0, len(traj))
        report = estimate_beta(traj, net.group_map(), window=window, scale=p["scale"])
        tr_acc = net.accuracy(w, train.features, train.labels)
        te_acc = net.accuracy(w, test.features, test.labels)
        return {"depth": depth, "eta": eta, "batch": batch, "eta_over_b": eta / batch, "rep": rep,
                "n_params": net.n_params, "beta_s": report.beta_s,
                "alpha_hats": ";".join(f"{a:.6g}" for a in report.alpha_hats),
                "above_two": int(report.above_two), "train_acc": tr_acc, "test_acc": te_acc,
                "gap": tr_acc - te_acc, "converged": int(tr_acc >= p["converged_accuracy"])}

    out, partial = _run_tasks(tasks, task, threads, _deadline(cfg))
    rows = sorted((o for o in out if o), key=lambda r: (r["depth"], r["eta"], r["batch"], r["rep"]))
    cells = {}
    for r in rows:
        cells.setdefault((r["depth"], r["eta"], r["batch"]), []).append(r)
    beta = [np.mean([r["beta_s"] for r in rs]) for rs in cells.values()]
    gap = [np.mean([r["gap"] for r in rs]) for rs in cells.values()]
    rho = float(spearmanr(beta, gap)[0]) if len(cells) >= 3 else float("nan")
    summary = [{"cells": len(cells), "spearman_beta_gap": rho, "sign": int(np.sign(rho)) if np.isfinite(rho) else 0,
                "spearman_etab_gap": float(spearmanr([k[1] / k[2] for k in cells], gap)[0]) if len(cells) >= 3 else float("nan"),
                "non_converged": sum(1 - r["converged"] for r in rows)}]
    cols = ["depth", "eta", "batch", "eta_over_b", "rep", "n_params", "beta_s", "alpha_hats", "above_two",
            "train_acc", "test_acc", "gap", "converged"]
    return RunResult("mlp-gap", cols, rows,
                     ["cells", "spearman_beta_gap", "sign", "spearman_etab_gap", "non_converged"],
                     summary, partial)


def _rho(name):
    if name == "loglog":
        return lambda n: np.log(np.log(n))
    return np.log


def run_bound(cfg: ExperimentConfig, threads: int = 1) -> RunResult:
    """Evaluate the three bound calculators along one swept input."""
    import warnings

    p = cfg.params
    rows = []
    for v in p["values"]:
        q = dict(p, **{p["sweep"]: v})
        inp = bnd.BoundInputs(q["loss_bound_B"], q["lipschitz_L"], int(q["n"]), q["gamma"], q["d_H"],
                              q["coupling_M"], q["diameter"], _rho(q["rho"]))
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            t1 = bnd.theorem1_bound(inp)
            t2 = bnd.theorem2_bound(inp) if inp.gamma < 1 else float("nan")
            ch = bnd.chaining_bound(inp) if inp.diameter is not None else float("nan")
        rows.append({p["sweep"]: v, "theorem1": t1, "theorem2": t2, "chaining": ch,
                     "small_n": int(any(issubclass(w.category, bnd.SmallSampleWarning) for w in caught))})
    return RunResult("bound", [p["sweep"], "theorem1", "theorem2", "chaining", "small_n"], rows,
                     notes={"chaining_constant": "c = 1 (symbolic)"})


RUNNERS = {
    "simulate": run_simulate,
    "dimension": run_dimension,
    "tailindex": run_tailindex,
    "synth-gap": run_synth_gap,
    "mlp-gap": run_mlp_gap,
    "bound": run_bound,
}


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> RunResult:
    return RUNNERS[cfg.kind](cfg, threads=threads)
