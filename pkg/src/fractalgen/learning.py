"""Datasets, logistic losses, risks, and the trajectory-wise generalization gap.

Labels are always in {-1, +1}. The population risk is taken over a fixed
finite population drawn from the same generator as the training sets.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

__all__ = [
    "Dataset",
    "RiskReport",
    "gen_mixture_dataset",
    "logistic_loss",
    "logistic_losses",
    "empirical_risk",
    "population_risk",
    "risk_along",
    "generalization_gap",
    "LogisticRegression",
    "MLP",
]


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        y = np.asarray(self.labels, dtype=float).reshape(-1)
        if len(y) < 1 or len(X) != len(y):
            raise ValueError("need n >= 1 rows with one label each")
        if not np.all(np.isfinite(X)):
            raise ValueError("features must be finite")
        if not np.all(np.isin(y, (-1.0, 1.0))):
            raise ValueError("labels must be -1 or +1")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)

    def __len__(self):
        return len(self.labels)

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def subset(self, idx) -> "Dataset":
        return Dataset(self.features[idx], self.labels[idx], dict(self.provenance, subset=True))

    def to_csv(self, path) -> None:
        header = ",".join([f"x{i}" for i in range(self.dim)] + ["y"])
        np.savetxt(path, np.column_stack([self.features, self.labels]), delimiter=",",
                   header=header, comments="", fmt="%.17g")


def gen_mixture_dataset(d: int, n: int, rng: np.random.Generator, means=None) -> Dataset:
    """Two-component Gaussian mixture for logistic regression.

    ``y ~ Bernoulli(1/2)`` on {-1, +1}, ``x | y ~ N(m_y, 100 I)`` with
    ``m_-1, m_+1 ~ N(0, 25 I)`` drawn once (or passed in as a ``(2, d)``
    array, row 0 for ``y = -1``).
    """
    if d < 1 or n < 1:
        raise ValueError("need d >= 1 and n >= 1")
    if means is None:
        means = rng.normal(0.0, 5.0, size=(2, d))
    means = np.asarray(means, dtype=float)
    y = np.where(rng.random(n) < 0.5, -1.0, 1.0)
    X = means[(y > 0).astype(int)] + rng.normal(0.0, 10.0, size=(n, d))
    return Dataset(X, y, {"generator": "gaussian_mixture", "d": d, "n": n,
                          "means": means.tolist()})


def logistic_losses(w, X, y) -> np.ndarray:
    """Per-row ``log(1 + exp(-y x.w))``; ``w`` may be ``(d,)`` or ``(T, d)``.

    For a stack of parameters the result has shape ``(T, n)``.
    """
    margins = np.asarray(w, dtype=float) @ (np.asarray(X, dtype=float) * np.asarray(y, dtype=float)[:, None]).T
    return np.logaddexp(0.0, -margins)


def logistic_loss(w, x, y):
    """Loss and gradient at one data point."""
    w = np.asarray(w, dtype=float)
    x = np.asarray(x, dtype=float)
    if w.shape != x.shape:
        raise ValueError(f"parameter shape {w.shape} does not match feature shape {x.shape}")
    m = y * float(x @ w)
    return float(np.logaddexp(0.0, -m)), -y * x * float(expit(-m))


def empirical_risk(w, S: Dataset) -> float:
    return float(np.mean(logistic_losses(w, S.features, S.labels)))


def population_risk(w, pop: Dataset) -> float:
    return empirical_risk(w, pop)


def risk_along(points, data: Dataset, chunk: int = 2_000_000) -> np.ndarray:
    """Mean logistic loss over ``data`` at every row of ``points``.

    Works in column chunks so that at most ``chunk`` losses are held at once.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    Z = data.features * data.labels[:, None]
    step = max(1, chunk // max(1, len(points)))
    total = np.zeros(len(points))
    for i in range(0, len(Z), step):
        total += np.logaddexp(0.0, -(points @ Z[i:i + step].T)).sum(axis=1)
    return total / len(Z)


@dataclass
class RiskReport:
    empirical: float
    population: float
    gap: float
    argmax_time: int
    empirical_path: np.ndarray = field(default=None, repr=False)
    population_path: np.ndarray = field(default=None, repr=False)


def generalization_gap(traj, S: Dataset, pop: Dataset) -> RiskReport:
    """``max_t |R_hat(w_t, S) - R(w_t)|`` over the recorded trajectory points."""
    points = np.asarray(getattr(traj, "points", traj), dtype=float)
    if points.ndim == 1:
        points = points[None, :]
    if len(points) == 0:
        raise ValueError("trajectory is empty")
    emp = risk_along(points, S)
    popr = risk_along(points, pop)
    diff = np.abs(emp - popr)
    k = int(np.argmax(diff))
    return RiskReport(float(emp[k]), float(popr[k]), float(diff[k]), k, emp, popr)


class LogisticRegression:
    """Linear logistic model; the objective interface used by :func:`run_sgd`."""

    def __init__(self, dim: int):
        self.dim = int(dim)
        self.n_params = self.dim

    def init(self, rng):
        return np.zeros(self.dim)

    def loss(self, w, X, y) -> float:
        return float(np.mean(logistic_losses(w, X, y)))

    def grad(self, w, X, y) -> np.ndarray:
        m = y * (X @ w)
        return -(X * (y * expit(-m))[:, None]).mean(axis=0)

    def group_map(self):
        return ["linear"] * self.dim


class MLP:
    """Fully connected ReLU network with a scalar logit and logistic loss.

    Parameters live in one flat vector, layer by layer: the weight matrix
    ``(out, in)`` in row-major order, then the bias. ``widths`` lists layer
    sizes from input to output, e.g. ``(10, 16, 1)``.
    """

    def __init__(self, widths):
        widths = tuple(int(w) for w in widths)
        if len(widths) < 3:
            raise ValueError("need at least one hidden layer")
        if widths[-1] != 1:
            raise ValueError("output layer must have width 1")
        if min(widths) < 1:
            raise ValueError("layer widths must be positive")
        self.widths = widths
        self.shapes = [(o, i) for i, o in zip(widths[:-1], widths[1:])]
        self.slices = []
        pos = 0
        for o, i in self.shapes:
            self.slices.append((slice(pos, pos + o * i), slice(pos + o * i, pos + o * i + o)))
            pos += o * i + o
        self.n_params = pos

    @property
    def depth(self) -> int:
        return len(self.shapes)

    def unpack(self, w):
        w = np.asarray(w, dtype=float)
        if w.shape != (self.n_params,):
            raise ValueError(f"expected {self.n_params} parameters, got shape {w.shape}")
        return [(w[ws].reshape(shape), w[bs]) for (ws, bs), shape in zip(self.slices, self.shapes)]

    def init(self, rng) -> np.ndarray:
        """He-normal weights, zero biases."""
        w = np.zeros(self.n_params)
        for (ws, _), (o, i) in zip(self.slices, self.shapes):
            w[ws] = rng.normal(0.0, np.sqrt(2.0 / i), size=o * i)
        return w

    def group_map(self):
        """Layer label for every parameter; a layer's weights and bias share a group."""
        labels = np.empty(self.n_params, dtype=object)
        for l, (ws, bs) in enumerate(self.slices):
            labels[ws] = f"layer{l}"
            labels[bs] = f"layer{l}"
        return list(labels)

    def forward(self, w, X, keep=False):
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.widths[0]:
            raise ValueError(f"expected inputs with {self.widths[0]} columns")
        acts = [X]
        h = X
        layers = self.unpack(w)
        for l, (W, b) in enumerate(layers):
            z = h @ W.T + b
            h = z if l == len(layers) - 1 else np.maximum(z, 0.0)
            acts.append(h)
        logits = h[:, 0]
        return (logits, acts) if keep else logits

    def loss(self, w, X, y) -> float:
        return float(np.mean(np.logaddexp(0.0, -y * self.forward(w, X))))

    def loss_and_grad(self, w, X, y):
        logits, acts = self.forward(w, X, keep=True)
        y = np.asarray(y, dtype=float)
        m = y * logits
        n = len(y)
        loss = float(np.mean(np.logaddexp(0.0, -m)))
        delta = (-y * expit(-m) / n)[:, None]
        g = np.zeros(self.n_params)
        layers = self.unpack(w)
        for l in range(len(layers) - 1, -1, -1):
            (ws, bs), (W, _) = self.slices[l], layers[l]
            g[ws] = (delta.T @ acts[l]).reshape(-1)
            g[bs] = delta.sum(axis=0)
            if l:
                delta = (delta @ W) * (acts[l] > 0)
        return loss, g

    def grad(self, w, X, y) -> np.ndarray:
        return self.loss_and_grad(w, X, y)[1]

    def accuracy(self, w, X, y) -> float:
        return float(np.mean(np.where(self.forward(w, X) >= 0, 1.0, -1.0) == y))
