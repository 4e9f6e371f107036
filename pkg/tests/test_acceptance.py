"""Exit criteria, each run at its stated tolerance and budget."""

import time

import numpy as np
import pytest
from gradcheck import numeric_grad, relative_error

from fractalgen.bounds import BoundInputs, chaining_bound, theorem1_bound, theorem2_bound
from fractalgen.cli import main
from fractalgen.config import ExperimentConfig
from fractalgen.experiments import run_experiment
from fractalgen.learning import MLP, logistic_loss
from fractalgen.stable import StableParams, chf, empirical_chf, sample_sas
from fractalgen.tail_index import estimate_alpha

pytestmark = pytest.mark.acceptance


@pytest.mark.parametrize("alpha", [1.0, 1.5, 2.0])
def test_sampler_correctness(alpha, criterion):
    start = time.perf_counter()
    p = StableParams(alpha, 1.0)
    x = sample_sas(p, np.random.default_rng(1), 100_000)
    errs = [abs(empirical_chf(x, w) - chf(p, w)) for w in (0.5, 1.0, 2.0)]
    ok = max(errs) <= 0.03
    detail = f"alpha={alpha} max chf error {max(errs):.4f} (tol 0.03)"
    if alpha == 2.0:
        rel = abs(x.var() / 2.0 - 1)
        ok &= rel <= 0.05
        detail += f", variance off by {100 * rel:.2f}% (tol 5%)"
    elapsed = time.perf_counter() - start
    ok &= elapsed < 5
    assert criterion(1, "sampler correctness", ok, f"{detail}, {elapsed:.2f}s")


def test_dimension_recovery(criterion):
    start = time.perf_counter()
    cfg = ExperimentConfig("dimension", seed=0, repetitions=20,
                           params={"alphas": [1.0, 1.25, 1.5, 1.75, 2.0], "points": 100_000, "dim": 2})
    res = run_experiment(cfg)
    elapsed = time.perf_counter() - start
    slopes = {a: np.array([r["slope"] for r in res.rows if r["alpha"] == a]) for a in (1.0, 1.5, 2.0)}
    worst = {a: float(np.max(np.abs(s - a))) for a, s in slopes.items()}
    means = [r["mean_slope"] for r in res.summary]
    within = all(w <= 0.2 for w in worst.values())
    increasing = bool(np.all(np.diff(means) > 0))
    ok = within and increasing and elapsed < 120
    detail = (", ".join(f"alpha={a}: worst |err| {w:.3f}" for a, w in worst.items())
              + f"; means {np.round(means, 3).tolist()} increasing={increasing}; {elapsed:.0f}s")
    assert criterion(2, "dimension recovery", ok, detail)


def test_tail_index_calibration(criterion):
    start = time.perf_counter()
    maes = {}
    for alpha in (1.2, 1.5, 1.8, 2.0):
        est = [estimate_alpha(sample_sas(StableParams(alpha), np.random.default_rng(s), 100_000))
               for s in range(50)]
        maes[alpha] = float(np.mean(np.abs(np.array(est) - alpha)))
    x = sample_sas(StableParams(1.5), np.random.default_rng(99), 100_000)
    base = estimate_alpha(x)
    drift = max(abs(estimate_alpha(c * x) - base) for c in (1e-8, 0.37, 3.0, 1e9))
    elapsed = time.perf_counter() - start
    ok = max(maes.values()) <= 0.15 and drift < 1e-9 and elapsed < 60
    detail = (", ".join(f"alpha={a}: {m:.3f}" for a, m in maes.items())
              + f" (tol 0.15); scale drift {drift:.1e}; {elapsed:.0f}s")
    assert criterion(3, "tail-index calibration", ok, detail)


@pytest.mark.slow
def test_synthetic_gap(criterion):
    start = time.perf_counter()
    cfg = ExperimentConfig("synth-gap", seed=0, repetitions=20, params={
        "population": 100_000, "ns": [100, 1000, 10_000], "alphas": [1.0, 1.5, 2.0], "subsets": 20})
    res = run_experiment(cfg)
    elapsed = time.perf_counter() - start
    table = {(r["alpha"], r["n"]): r["mean_gap"] for r in res.summary}
    alphas, ns = (1.0, 1.5, 2.0), (100, 1000, 10_000)
    inc = {n: bool(np.all(np.diff([table[(a, n)] for a in alphas]) > 0)) for n in ns}
    dec = {a: bool(np.all(np.diff([table[(a, n)] for n in ns]) < 0)) for a in alphas}
    ok = all(inc.values()) and all(dec.values()) and elapsed < 600
    rows = "; ".join(f"n={n}: " + "/".join(f"{table[(a, n)]:.3g}" for a in alphas) for n in ns)
    detail = (f"mean gap by alpha {rows}; increasing in alpha {inc}; decreasing in n {dec}; "
              f"{elapsed:.0f}s")
    assert criterion(4, "synthetic gap trends", ok, detail)


def test_bound_calculators(criterion):
    import math

    t1 = theorem1_bound(BoundInputs(1.0, 1.0, 10_000, 0.1, 2.0))
    t2 = theorem2_bound(BoundInputs(1.0, 1.0, 10_000, 0.1, 1.0, coupling_M=1.0))
    o1 = math.sqrt((4 * math.log(1e4) + math.log(10)) / 1e4)
    o2 = 2 * math.sqrt((2 * math.log(1e4) ** 2 + math.log(70)) / 1e4)
    rel = max(abs(t1 / o1 - 1), abs(t2 / o2 - 1))
    mono = True
    for d in (0.0, 0.5, 1.0, 2.0):
        for g in (0.5, 0.1, 0.01):
            inp = lambda **kw: BoundInputs(**{**dict(loss_bound_B=1.0, lipschitz_L=1.0, n=10_000,
                                                     gamma=g, d_H=d, coupling_M=2.0, diameter=1.0), **kw})
            for f in (theorem1_bound, theorem2_bound, chaining_bound):
                mono &= f(inp(d_H=d + 0.5)) > f(inp())
                mono &= f(inp(loss_bound_B=2.0)) > f(inp())
                mono &= f(inp(gamma=g / 2)) > f(inp())
                mono &= f(inp(n=10**6)) < f(inp())
            mono &= theorem2_bound(inp(coupling_M=4.0)) > theorem2_bound(inp())
    ok = rel < 1e-12 and mono
    assert criterion(5, "bound calculators", ok,
                     f"theorem1 {t1:.5f}, theorem2 {t2:.5f}, max rel err {rel:.1e}; monotone grid {mono}")


@pytest.mark.slow
def test_mlp_beta_gap(criterion):
    start = time.perf_counter()
    cfg = ExperimentConfig("mlp-gap", seed=0, params={"depths": [1, 2, 3], "etas": [1e-2, 1e-3],
                                                      "batches": [32, 128]})
    res = run_experiment(cfg)
    elapsed = time.perf_counter() - start
    s = res.summary[0]
    ok = s["cells"] >= 12 and s["spearman_beta_gap"] > 0 and elapsed < 1200
    assert criterion(6, "MLP beta_S vs gap", ok,
                     f"{s['cells']} cells, Spearman {s['spearman_beta_gap']:.3f}, "
                     f"{s['non_converged']} non-converged; {elapsed:.0f}s")


def test_gradient_checks(criterion):
    rng = np.random.default_rng(0)
    log_err = 0.0
    for _ in range(50):
        w, x, y = rng.normal(size=10), rng.normal(size=10), rng.choice([-1.0, 1.0])
        fd = numeric_grad(lambda v: logistic_loss(v, x, y)[0], w)
        log_err = max(log_err, relative_error(logistic_loss(w, x, y)[1], fd))
    net = MLP((10, 16, 16, 1))
    mlp_err = 0.0
    for _ in range(50):
        w = net.init(rng) + 0.1 * rng.normal(size=net.n_params)
        X, y = rng.normal(size=(16, 10)), rng.choice([-1.0, 1.0], 16)
        fd = numeric_grad(lambda v: net.loss(v, X, y), w)
        mlp_err = max(mlp_err, relative_error(net.grad(w, X, y), fd))
    ok = log_err < 1e-5 and mlp_err < 1e-5
    assert criterion(7, "gradient checks", ok, f"logistic {log_err:.1e}, MLP {mlp_err:.1e} (tol 1e-5)")


DETERMINISM = {
    "simulate": ["--set", "step=0.001"],
    "dimension": ["--repetitions", "3", "--set", "points=20000"],
    "tailindex": ["--repetitions", "3", "--set", "steps=5000"],
    "synth-gap": ["--repetitions", "3", "--set", "population=5000", "--set", "ns=[100, 1000]",
                  "--set", "subsets=5"],
    "mlp-gap": ["--set", "depths=[1, 2]", "--set", "etas=[0.01]", "--set", "batches=[32]",
                "--set", "epochs=5", "--set", "n_train=300", "--set", "n_test=300"],
    "bound": [],
}


def test_determinism(tmp_path, criterion):
    same = {}
    for kind, extra in DETERMINISM.items():
        blobs = []
        for run, threads in (("a", "1"), ("b", "2")):
            out = tmp_path / f"{kind}-{run}"
            assert main([kind, "--seed", "12345", "--out", str(out), "--threads", threads, "-q",
                         "--no-plots", *extra]) == 0
            blobs.append({p.name: p.read_bytes() for p in sorted(out.glob("*.csv"))})
        same[kind] = blobs[0] == blobs[1] and len(blobs[0]) > 0
    ok = all(same.values())
    assert criterion(8, "determinism", ok, ", ".join(f"{k}={'identical' if v else 'DIFFERENT'}"
                                                     for k, v in same.items()))
