"""Box-counting (Minkowski) dimension of trajectory images and the BG index.

The Hausdorff dimension of a finite trajectory is not computable directly.
For sets that are Ahlfors regular it coincides with the Minkowski dimension,
which is what :func:`estimate_dimension` measures: the slope of
``log N_delta`` against ``log(1/delta)``, where ``N_delta`` counts the cells
of the half-open mesh ``prod_i [j_i delta, (j_i + 1) delta)`` that contain a
trajectory point. A coordinate lying exactly on ``j delta`` belongs to cell
``j``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field

import numpy as np

__all__ = [
    "DimensionEstimate",
    "FitWindow",
    "box_count",
    "box_counts",
    "estimate_dimension",
    "analytic_bg_index",
    "write_counts_csv",
]


def _cell_keys(points: np.ndarray, delta: float) -> np.ndarray:
    cells = np.floor(points / delta).astype(np.int64)
    if cells.shape[1] == 1:
        return cells[:, 0]
    cells -= cells.min(axis=0)
    spans = cells.max(axis=0) + 1
    # pack rows into one integer when the mesh fits in 63 bits
    if np.sum(np.log2(spans.astype(float))) < 62:
        key = np.zeros(len(cells), dtype=np.int64)
        for j in range(cells.shape[1]):
            key = key * spans[j] + cells[:, j]
        return key
    return np.ascontiguousarray(cells).view(np.dtype((np.void, 8 * cells.shape[1]))).ravel()


def box_count(points, delta: float) -> int:
    """Number of occupied cells of the origin-anchored ``delta``-mesh."""
    if not delta > 0:
        raise ValueError(f"delta must be positive, got {delta!r}")
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if len(pts) == 0:
        raise ValueError("need at least one point")
    if not np.all(np.isfinite(pts)):
        raise ValueError("points must be finite")
    return int(np.unique(_cell_keys(pts, float(delta))).size)


def box_counts(points, deltas) -> np.ndarray:
    return np.array([box_count(points, d) for d in deltas], dtype=np.int64)


@dataclass(frozen=True)
class FitWindow:
    """Which scales enter the log-log fit.

    Scales with fewer than ``min_count`` occupied cells (dominated by the
    overall shape of the path) or more than ``max_fraction`` times the
    number of points (saturated by the finite sample) are dropped. At least
    ``min_scales`` scales must survive.
    """

    min_count: int = 100
    max_fraction: float = 0.1
    min_scales: int = 4


@dataclass
class DimensionEstimate:
    slope: float
    raw_slope: float
    r_squared: float
    scales: np.ndarray
    counts: np.ndarray
    used: np.ndarray = field(repr=False)
    intercept: float = 0.0
    degenerate: bool = False
    window_ok: bool = True

    def to_dict(self) -> dict:
        out = asdict(self)
        for k in ("scales", "counts", "used"):
            out[k] = np.asarray(out[k]).tolist()
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def estimate_dimension(traj, scale_count: int = 18, window: FitWindow = FitWindow()) -> DimensionEstimate:
    """Box-counting slope of a trajectory image.

    ``traj`` is a :class:`~fractalgen.processes.Trajectory` or an ``(N, d)``
    array. Scales are ``delta_k = delta_0 2^-k`` for ``k < scale_count``
    with ``delta_0`` the largest coordinate extent. The returned ``slope``
    is clipped to ``[0, d]``; ``raw_slope`` is the unclipped fit.

    If fewer than ``window.min_scales`` scales pass the window, the fit
    falls back to the ``min_scales`` consecutive scales whose middle count
    is closest to the geometric centre of the window, and ``window_ok`` is
    False.
    """
    points = np.asarray(getattr(traj, "points", traj), dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    n, d = points.shape
    extent = float(np.max(points.max(axis=0) - points.min(axis=0))) if n else 0.0
    if extent == 0.0:
        return DimensionEstimate(0.0, 0.0, 0.0, np.array([]), np.array([], dtype=np.int64),
                                 np.array([], dtype=bool), degenerate=True, window_ok=False)

    scales = extent * 2.0 ** -np.arange(scale_count)
    counts = box_counts(points, scales)
    used = (counts >= window.min_count) & (counts <= window.max_fraction * n)
    window_ok = int(used.sum()) >= window.min_scales
    if not window_ok:
        k = min(window.min_scales, scale_count)
        target = 0.5 * (np.log(window.min_count) + np.log(window.max_fraction * n))
        logc = np.log(counts)
        starts = range(scale_count - k + 1)
        best = min(starts, key=lambda s: abs(np.mean(logc[s:s + k]) - target))
        used = np.zeros(scale_count, dtype=bool)
        used[best:best + k] = True

    x = np.log(1.0 / scales[used])
    y = np.log(counts[used].astype(float))
    if np.ptp(y) == 0:
        raw, intercept, r2 = 0.0, float(y[0]), 1.0
    else:
        raw, intercept = np.polyfit(x, y, 1)
        resid = y - (raw * x + intercept)
        r2 = 1.0 - float(resid @ resid) / float(((y - y.mean()) ** 2).sum())
    return DimensionEstimate(
        slope=float(np.clip(raw, 0.0, d)),
        raw_slope=float(raw),
        r_squared=float(r2),
        scales=scales,
        counts=counts,
        used=used,
        intercept=float(intercept),
        window_ok=window_ok,
    )


def analytic_bg_index(alphas) -> float:
    """BG index of a Levy motion with per-group indices: the largest one."""
    a = np.atleast_1d(np.asarray(alphas, dtype=float))
    if a.size == 0:
        raise ValueError("need at least one tail index")
    if np.any(~(a > 0)) or np.any(a > 2):
        raise ValueError("tail indices must lie in (0, 2]")
    return float(a.max())


def write_counts_csv(est: DimensionEstimate, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["delta", "count", "log_delta", "log_count", "used"])
        for s, c, u in zip(est.scales, est.counts, est.used):
            writer.writerow([repr(float(s)), int(c), repr(float(np.log(s))),
                             repr(float(np.log(c))), int(bool(u))])
