"""Levy motions, Euler-Maruyama for heavy-tailed SDEs, and recorded SGD.

Every simulator returns a :class:`Trajectory`. Randomness always comes from
an explicit ``numpy.random.Generator``; the same generator state, spec and
step produce bit-identical output.
"""

from __future__ import annotations

import csv
import logging
import struct
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .stable import MultivariateStableSpec, sample_multivariate

logger = logging.getLogger(__name__)

__all__ = [
    "Trajectory",
    "DrivingSpec",
    "SimulationError",
    "MinibatchSampler",
    "simulate_levy",
    "simulate_sde",
    "run_sgd",
    "interpolate",
    "save_binary",
    "load_binary",
    "save_csv",
]

DEFAULT_DIVERGENCE_CAP = 1e12


class SimulationError(RuntimeError):
    """Raised when a simulation produces non-finite values."""


@dataclass
class Trajectory:
    """Time-indexed parameter vectors.

    ``points`` has shape ``(len(times), d)``. ``truncated`` is set when a
    simulation stopped early because the state left the divergence cap.
    """

    times: np.ndarray
    points: np.ndarray
    eta: float = float("nan")
    horizon: float = float("nan")
    seed: Optional[int] = None
    truncated: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.points = np.asarray(self.points, dtype=float)
        if self.points.ndim == 1:
            self.points = self.points[:, None]
        if self.times.ndim != 1 or len(self.times) != len(self.points):
            raise ValueError("times and points must have matching length")
        if len(self.times) == 0:
            raise ValueError("trajectory needs at least one point")
        if self.times[0] != 0.0:
            raise ValueError("trajectory must start at t = 0")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if not np.all(np.isfinite(self.points)):
            raise ValueError("trajectory contains non-finite coordinates")

    def __len__(self):
        return len(self.times)

    @property
    def dim(self) -> int:
        return self.points.shape[1]


Coefficient = Union[None, float, np.ndarray, Callable[[np.ndarray], Union[float, np.ndarray]]]


def _apply(coeff: Coefficient, w: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Multiply ``v`` by a scalar, matrix, or state-dependent coefficient."""
    if coeff is None:
        return np.zeros_like(v)
    c = coeff(w) if callable(coeff) else coeff
    c = np.asarray(c, dtype=float)
    if c.ndim == 0:
        return float(c) * v
    if c.ndim == 1:
        return c * v
    return c @ v


@dataclass
class DrivingSpec:
    """Coefficients of ``dW = -S0 grad f dt + S1 dB + S2 dL^alpha``.

    ``grad`` is the gradient of the objective (``None`` for zero drift).
    Coefficients may be ``None`` (zero), scalars, diagonal vectors, ``d x d``
    matrices, or callables of the state returning any of those. Tail indices
    are state independent; per-coordinate indices come from an
    independent-components ``stable_law``.
    """

    stable_law: MultivariateStableSpec
    grad: Optional[Callable[[np.ndarray], np.ndarray]] = None
    preconditioner: Coefficient = 1.0
    gaussian_coeff: Coefficient = None
    stable_coeff: Coefficient = None

    @property
    def dim(self) -> int:
        return self.stable_law.dim


def _time_grid(horizon: float, step: float) -> np.ndarray:
    if not (horizon > 0 and np.isfinite(horizon)):
        raise ValueError(f"horizon must be positive, got {horizon!r}")
    if not (0 < step <= horizon):
        raise ValueError(f"step must lie in (0, horizon], got {step!r}")
    n = int(np.ceil(horizon / step - 1e-9))
    times = np.arange(n + 1, dtype=float) * step
    times[-1] = horizon
    return times


def _stable_increments(spec: MultivariateStableSpec, dt: np.ndarray, rng) -> np.ndarray:
    """Stable increments over intervals ``dt``, scaled by ``dt^(1/alpha_i)``."""
    xi = sample_multivariate(spec, rng, size=len(dt))
    return xi * dt[:, None] ** (1.0 / spec.coordinate_alphas())[None, :]


def simulate_levy(
    spec: MultivariateStableSpec,
    horizon: float,
    step: float,
    rng: np.random.Generator,
    seed: Optional[int] = None,
) -> Trajectory:
    """Sample a stable Levy motion started at 0 on a regular grid.

    Exact in law at the grid times by strict stability: each increment is
    ``h^(1/alpha) xi`` with ``xi`` drawn from ``spec`` (per-coordinate
    exponents for independent components).
    """
    times = _time_grid(horizon, step)
    inc = _stable_increments(spec, np.diff(times), rng)
    points = np.zeros((len(times), spec.dim))
    np.cumsum(inc, axis=0, out=points[1:])
    if not np.all(np.isfinite(points)):
        bad = int(np.argmax(~np.all(np.isfinite(points), axis=1)))
        raise SimulationError(
            f"non-finite state at step {bad} (alpha={spec.coordinate_alphas().min():g})"
        )
    return Trajectory(times, points, eta=step, horizon=horizon, seed=seed,
                      meta={"process": "levy", **spec.to_dict()})


def simulate_sde(
    driving: DrivingSpec,
    initial,
    horizon: float,
    step: float,
    rng: np.random.Generator,
    cap: float = DEFAULT_DIVERGENCE_CAP,
    seed: Optional[int] = None,
) -> Trajectory:
    """Euler-Maruyama for the heavy-tailed SDE described by ``driving``.

    One step reads::

        w += -h S0(w) grad(w) + sqrt(h) S1(w) g + h^(1/alpha) S2(w) xi

    with ``g ~ N(0, I)`` and ``xi`` from ``driving.stable_law``. If any
    coordinate exceeds ``cap`` in magnitude the run stops and the partial
    trajectory is returned with ``truncated=True``.
    """
    w = np.array(initial, dtype=float).reshape(-1)
    d = driving.dim
    if w.size != d:
        raise ValueError(f"initial point has dimension {w.size}, driving law has {d}")
    times = _time_grid(horizon, step)
    dt = np.diff(times)
    stable_scale = dt[:, None] ** (1.0 / driving.stable_law.coordinate_alphas())[None, :]
    # noise is drawn in bulk up front so that the stream does not depend on
    # which coefficients happen to be zero
    gauss = rng.standard_normal((len(dt), d))
    xi = sample_multivariate(driving.stable_law, rng, size=len(dt))

    points = np.empty((len(times), d))
    points[0] = w
    truncated = False
    last = len(times) - 1
    for k in range(len(dt)):
        h = dt[k]
        drift = np.zeros(d)
        if driving.grad is not None:
            drift = _apply(driving.preconditioner, w, np.asarray(driving.grad(w), dtype=float))
        w = (
            w
            - h * drift
            + np.sqrt(h) * _apply(driving.gaussian_coeff, w, gauss[k])
            + _apply(driving.stable_coeff, w, stable_scale[k] * xi[k])
        )
        if not np.all(np.isfinite(w)) or np.max(np.abs(w)) > cap:
            logger.warning("simulate_sde: state left the cap %.3g at step %d; truncating", cap, k + 1)
            truncated = True
            last = k
            break
        points[k + 1] = w
    return Trajectory(times[: last + 1], points[: last + 1], eta=step, horizon=horizon,
                      seed=seed, truncated=truncated, meta={"process": "sde"})


class MinibatchSampler:
    """Draws minibatch index sets from ``range(n)``.

    Only the dataset size is ever seen, which keeps the index stream
    independent of the data values.
    """

    def __init__(self, n: int, batch: int, rng: np.random.Generator):
        if not (1 <= batch <= n):
            raise ValueError(f"batch size must lie in [1, {n}], got {batch}")
        self.n = int(n)
        self.batch = int(batch)
        self.rng = rng

    def __call__(self) -> np.ndarray:
        return self.rng.choice(self.n, size=self.batch, replace=False)


def run_sgd(
    objective,
    data,
    eta: float,
    batch: int,
    epochs: int,
    rng: np.random.Generator,
    w0=None,
    record_from: int = 0,
    seed: Optional[int] = None,
) -> Trajectory:
    """Run minibatch SGD and record the iterates.

    ``objective`` must provide ``grad(w, X, y)`` (mean gradient over the
    rows) and ``init(rng)`` (used when ``w0`` is None). One epoch is
    ``max(1, n // batch)`` steps, each on a fresh uniform draw of ``batch``
    indices without replacement. Iterates with step index below
    ``record_from`` are not stored (``w0`` always is).
    """
    if eta <= 0:
        raise ValueError(f"step size must be positive, got {eta!r}")
    if epochs < 0:
        raise ValueError("epochs must be non-negative")
    n = len(data.labels)
    sampler = MinibatchSampler(n, batch, rng)
    w = np.array(objective.init(rng) if w0 is None else w0, dtype=float).reshape(-1)
    steps_per_epoch = max(1, n // batch)
    total = epochs * steps_per_epoch

    steps = [0]
    record = [w.copy()]
    X, y = data.features, data.labels
    for k in range(total):
        idx = sampler()
        g = objective.grad(w, X[idx], y[idx])
        if not np.all(np.isfinite(g)):
            raise SimulationError(f"non-finite gradient at step {k} (eta={eta:g}, batch={batch})")
        w = w - eta * g
        if k + 1 >= record_from:
            steps.append(k + 1)
            record.append(w.copy())
    steps = np.asarray(steps, dtype=float)
    return Trajectory(steps * eta, np.vstack(record), eta=eta, horizon=total * eta, seed=seed,
                      meta={"process": "sgd", "batch": batch, "epochs": epochs,
                            "steps_per_epoch": steps_per_epoch, "record_from": record_from})


def interpolate(traj: Trajectory, resolution: int) -> Trajectory:
    """Piecewise-linear refinement: each interval is split into ``resolution`` pieces.

    The result has ``(len(traj) - 1) * resolution + 1`` points and keeps the
    original points exactly.
    """
    resolution = int(resolution)
    if resolution < 1:
        raise ValueError("resolution must be >= 1")
    if resolution == 1 or len(traj) == 1:
        return traj
    frac = np.arange(resolution) / resolution
    t0, t1 = traj.times[:-1], traj.times[1:]
    p0, p1 = traj.points[:-1], traj.points[1:]
    times = (t0[:, None] + frac[None, :] * (t1 - t0)[:, None]).reshape(-1)
    pts = (p0[:, None, :] + frac[None, :, None] * (p1 - p0)[:, None, :]).reshape(-1, traj.dim)
    times = np.append(times, traj.times[-1])
    pts = np.vstack([pts, traj.points[-1]])
    return Trajectory(times, pts, eta=traj.eta, horizon=traj.horizon, seed=traj.seed,
                      truncated=traj.truncated, meta=dict(traj.meta, resolution=resolution))


# little-endian: d, count, eta, T, seed
_HEADER = struct.Struct("<qqddq")


def save_binary(traj: Trajectory, path) -> None:
    """Columnar binary: header ``{d, count, eta, T, seed}`` then row-major float64 points.

    ``T`` is the last recorded time. Times are not stored; :func:`load_binary`
    rebuilds a uniform grid on ``[0, T]``, so use :func:`save_csv` for
    trajectories recorded on an irregular grid. A missing seed is written as -1.
    """
    seed = -1 if traj.seed is None else int(traj.seed)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(traj.dim, len(traj), float(traj.eta), float(traj.times[-1]), seed))
        fh.write(np.ascontiguousarray(traj.points, dtype="<f8").tobytes())


def load_binary(path) -> Trajectory:
    with open(path, "rb") as fh:
        d, count, eta, horizon, seed = _HEADER.unpack(fh.read(_HEADER.size))
        points = np.frombuffer(fh.read(), dtype="<f8")
    if points.size != d * count:
        raise ValueError(f"{path}: expected {d * count} values, found {points.size}")
    points = points.reshape(count, d).astype(float)
    times = np.linspace(0.0, horizon, count) if count > 1 else np.zeros(1)
    return Trajectory(times, points, eta=eta, horizon=horizon, seed=None if seed < 0 else seed)


def save_csv(traj: Trajectory, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + [f"w{i}" for i in range(traj.dim)])
        for t, p in zip(traj.times, traj.points):
            writer.writerow([repr(float(t))] + [repr(float(v)) for v in p])
