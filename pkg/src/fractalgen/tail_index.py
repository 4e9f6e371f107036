"""Tail-index estimation from iterate streams.

For i.i.d. strictly stable ``X_j`` the sum of a block of ``k1`` samples is
distributed as ``k1^(1/alpha) X``. Comparing mean log-magnitudes of block
sums and of single samples therefore isolates ``1/alpha``::

    1/alpha_hat = (mean_i log|Y_i| - mean_j log|X_j|) / log k1

The scale of the samples cancels between the two terms.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .fractal import analytic_bg_index

logger = logging.getLogger(__name__)

__all__ = [
    "TailIndexReport",
    "preprocess_increments",
    "estimate_alpha",
    "estimate_beta",
    "default_k1",
]


def default_k1(size: int) -> int:
    return max(2, int(round(np.sqrt(size))))


def preprocess_increments(
    traj, group_map: Sequence, window=None, drop_frozen: bool = True, scale: str = "group"
) -> dict:
    """Centred successive differences per coordinate group.

    ``group_map[i]`` names the group of coordinate ``i``. ``window`` is a
    ``(start, stop)`` slice of iterate indices (default: all). Returns
    ``{group: flat array}`` ordered by first appearance, each of length
    ``n_coords * (m - 1)`` for a window of ``m`` iterates.

    With ``drop_frozen`` a coordinate that does not move at all inside the
    window (a dead ReLU unit, say) is left out of its group; after centring
    it would otherwise become a point mass that reads as an extremely heavy
    tail. A group whose coordinates are all frozen keeps them and comes out
    all zero.

    ``scale="group"`` subtracts the group mean only. ``scale="coordinate"``
    centres each coordinate and divides it by its mean absolute increment
    over the window, so that coordinates with different noise scales can be
    pooled.
    """
    if scale not in ("group", "coordinate"):
        raise ValueError(f"unknown scaling {scale!r}")
    points = np.asarray(getattr(traj, "points", traj), dtype=float)
    if points.ndim == 1:
        points = points[:, None]
    group_map = list(group_map)
    if len(group_map) != points.shape[1]:
        raise ValueError(f"group map covers {len(group_map)} coordinates, trajectory has {points.shape[1]}")
    start, stop = (0, len(points)) if window is None else window
    if not (0 <= start < stop <= len(points)):
        raise ValueError(f"window {window!r} outside trajectory of length {len(points)}")
    if stop - start < 2:
        raise ValueError("window must contain at least 2 iterates")
    diffs = np.diff(points[start:stop], axis=0)
    labels = np.asarray(group_map, dtype=object)
    out = {}
    moving = np.any(diffs != 0, axis=0)
    for g in dict.fromkeys(group_map):
        cols = labels == g
        if drop_frozen and np.any(cols & moving):
            cols &= moving
        sub = diffs[:, cols]
        if scale == "coordinate":
            sub = sub - sub.mean(axis=0)
            spread = np.abs(sub).mean(axis=0)
            sub = sub / np.where(spread > 0, spread, 1.0)
        block = sub.reshape(-1)
        out[g] = block - block.mean()
    return out


def estimate_alpha(samples, k1: int | None = None) -> float:
    """Block-sum log-moment estimate of the tail index of centred samples.

    Uses the first ``k1 * (K // k1)`` samples; ``k1`` defaults to
    ``round(sqrt(K))``. Exact zeros are replaced by the smallest positive
    float before taking logs. Returns ``nan`` for all-zero input.
    """
    x = np.asarray(samples, dtype=float).reshape(-1)
    if k1 is None:
        k1 = default_k1(x.size)
    k1 = int(k1)
    if k1 < 2:
        raise ValueError("block size must be >= 2")
    k2 = x.size // k1
    if k2 < 2:
        raise ValueError(f"need at least 2 blocks of {k1}, got {x.size} samples")
    x = x[: k1 * k2]
    if not np.any(x):
        return float("nan")
    y = x.reshape(k2, k1).sum(axis=1)
    tiny = np.finfo(float).tiny
    zeros = int(np.sum(x == 0) + np.sum(y == 0))
    if zeros:
        logger.warning("estimate_alpha: %d exact zeros perturbed before log", zeros)
    ax = np.where(x == 0, tiny, np.abs(x))
    ay = np.where(y == 0, tiny, np.abs(y))
    inv_alpha = (np.mean(np.log(ay)) - np.mean(np.log(ax))) / np.log(k1)
    return float(1.0 / inv_alpha)


@dataclass
class TailIndexReport:
    group_names: list
    alpha_hats: np.ndarray
    sample_counts: np.ndarray
    degenerate: list = field(default_factory=list)

    def __post_init__(self):
        self.alpha_hats = np.asarray(self.alpha_hats, dtype=float)
        self.sample_counts = np.asarray(self.sample_counts, dtype=np.int64)

    @property
    def beta_s(self) -> float:
        """Largest finite per-group estimate, unclipped."""
        finite = self.alpha_hats[np.isfinite(self.alpha_hats)]
        return float(finite.max()) if finite.size else float("nan")

    @property
    def above_two(self) -> bool:
        return bool(np.any(self.alpha_hats > 2))

    def clipped_beta(self) -> float:
        """``beta_s`` pushed into (0, 2] through :func:`analytic_bg_index`."""
        a = self.alpha_hats[np.isfinite(self.alpha_hats)]
        return analytic_bg_index(np.clip(a, np.finfo(float).eps, 2.0))

    def to_dict(self) -> dict:
        out = asdict(self)
        out["group_names"] = [str(g) for g in self.group_names]
        out["alpha_hats"] = self.alpha_hats.tolist()
        out["sample_counts"] = self.sample_counts.tolist()
        out["beta_s"] = self.beta_s
        out["above_two"] = self.above_two
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def table(self) -> str:
        lines = [f"{'group':<16}{'K':>10}{'alpha_hat':>12}"]
        for g, k, a in zip(self.group_names, self.sample_counts, self.alpha_hats):
            lines.append(f"{str(g):<16}{int(k):>10}{a:>12.4f}")
        lines.append(f"{'beta_S':<16}{'':>10}{self.beta_s:>12.4f}")
        return "\n".join(lines)


def estimate_beta(traj, group_map, window=None, k1_policy=default_k1, scale: str = "group") -> TailIndexReport:
    """Per-group tail indices of centred increments and their maximum.

    ``k1_policy`` maps a sample count to a block size, or is a fixed int.
    Groups whose increments are all zero are reported as ``nan`` and listed
    in ``degenerate``.
    """
    groups = preprocess_increments(traj, group_map, window, scale=scale)
    names, alphas, counts, degenerate = [], [], [], []
    for g, x in groups.items():
        k1 = k1_policy if isinstance(k1_policy, int) else k1_policy(x.size)
        a = estimate_alpha(x, k1)
        if not np.isfinite(a):
            degenerate.append(g)
        names.append(g)
        alphas.append(a)
        counts.append(x.size)
    return TailIndexReport(names, np.array(alphas), np.array(counts), degenerate)
