"""Symmetric alpha-stable laws in one and many dimensions.

Univariate draws use the Chambers-Mallows-Stuck transform. Multivariate
draws come in two families: elliptically contoured (sub-Gaussian) vectors
with chf ``exp(-||w||^alpha)`` and vectors with independent SaS components
with chf ``exp(-sum_i |w_i|^alpha_i)``.

No densities are provided; the characteristic function is the reference
interface for every correctness check.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

__all__ = [
    "StableParams",
    "MultivariateStableSpec",
    "sample_sas",
    "sample_positive_stable",
    "sample_multivariate",
    "chf",
    "empirical_chf",
]

# |alpha - 1| below this goes through the exact Cauchy branch
_CAUCHY_TOL = 1e-8


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not (0.0 < alpha <= 2.0) or not np.isfinite(alpha):
        raise ValueError(f"tail index must lie in (0, 2], got {alpha!r}")
    return alpha


@dataclass(frozen=True)
class StableParams:
    """Tail index ``alpha`` in (0, 2] and scale ``sigma`` > 0 of a SaS law."""

    alpha: float
    sigma: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "alpha", _check_alpha(self.alpha))
        sigma = float(self.sigma)
        if not (sigma > 0.0 and np.isfinite(sigma)):
            raise ValueError(f"scale must be positive and finite, got {self.sigma!r}")
        object.__setattr__(self, "sigma", sigma)


@dataclass(frozen=True)
class MultivariateStableSpec:
    """A d-dimensional symmetric stable law.

    Use :meth:`elliptic` or :meth:`independent` rather than the raw
    constructor. ``kind`` is ``"elliptic"`` (one ``alpha``) or
    ``"independent"`` (one tail index per coordinate, stored in ``alphas``).
    """

    dim: int
    kind: str
    alphas: np.ndarray = field(repr=False)

    def __post_init__(self):
        dim = int(self.dim)
        if dim < 1:
            raise ValueError(f"dimension must be >= 1, got {self.dim!r}")
        if self.kind not in ("elliptic", "independent"):
            raise ValueError(f"unknown stable family {self.kind!r}")
        alphas = np.atleast_1d(np.asarray(self.alphas, dtype=float)).copy()
        if self.kind == "elliptic" and alphas.size != 1:
            raise ValueError("elliptic law takes a single tail index")
        if self.kind == "independent" and alphas.size != dim:
            raise ValueError(f"expected {dim} tail indices, got {alphas.size}")
        for a in alphas:
            _check_alpha(a)
        alphas.setflags(write=False)
        object.__setattr__(self, "dim", dim)
        object.__setattr__(self, "alphas", alphas)

    @classmethod
    def elliptic(cls, alpha: float, dim: int) -> "MultivariateStableSpec":
        return cls(dim, "elliptic", np.array([alpha], dtype=float))

    @classmethod
    def independent(cls, alphas) -> "MultivariateStableSpec":
        alphas = np.atleast_1d(np.asarray(alphas, dtype=float))
        return cls(alphas.size, "independent", alphas)

    @property
    def alpha(self) -> float:
        """Single tail index (elliptic) or the largest one (independent)."""
        return float(self.alphas.max())

    def coordinate_alphas(self) -> np.ndarray:
        """Tail index per coordinate, length ``dim``."""
        if self.kind == "elliptic":
            return np.full(self.dim, self.alphas[0])
        return np.asarray(self.alphas)

    def to_dict(self) -> dict:
        if self.kind == "elliptic":
            return {"kind": "elliptic", "dim": self.dim, "alpha": float(self.alphas[0])}
        return {"kind": "independent", "dim": self.dim, "alphas": self.alphas.tolist()}


def _cms_standard(alpha, u, e):
    """CMS transform for unit-scale SaS given U~Unif(-pi/2, pi/2), E~Exp(1)."""
    if abs(alpha - 1.0) < _CAUCHY_TOL:
        return np.tan(u)
    if alpha == 2.0:
        # exact Gaussian branch, N(0, 2)
        return 2.0 * np.sqrt(e) * np.sin(u)
    return (
        np.sin(alpha * u)
        / np.cos(u) ** (1.0 / alpha)
        * (np.cos((1.0 - alpha) * u) / e) ** ((1.0 - alpha) / alpha)
    )


def sample_sas(params: StableParams, rng: np.random.Generator, size=None):
    """Draw from SaS(sigma) with chf ``exp(-|sigma w|^alpha)``.

    Returns a float when ``size`` is None, else an array of that shape.
    ``alpha = 2`` gives N(0, 2 sigma^2) and ``alpha = 1`` the Cauchy law with
    scale ``sigma``.
    """
    u = rng.uniform(-np.pi / 2, np.pi / 2, size=size)
    e = rng.standard_exponential(size=size)
    x = params.sigma * _cms_standard(params.alpha, u, e)
    if size is None:
        return float(x)
    return x


def sample_positive_stable(alpha_half: float, rng: np.random.Generator, size=None):
    """Totally skewed positive stable draw with Laplace transform ``exp(-s^a)``.

    Kanter's representation, ``a = alpha_half`` in (0, 1). With this
    normalization ``sqrt(A) * G``, ``G ~ N(0, 2 I)``, has chf
    ``exp(-||w||^(2a))``. For ``a = 1/2`` the law is Levy with scale 1/2.
    """
    a = float(alpha_half)
    if not (0.0 < a < 1.0):
        raise ValueError(f"alpha_half must lie in (0, 1), got {alpha_half!r}")
    u = rng.uniform(0.0, np.pi, size=size)
    e = rng.standard_exponential(size=size)
    x = (
        np.sin(a * u)
        / np.sin(u) ** (1.0 / a)
        * (np.sin((1.0 - a) * u) / e) ** ((1.0 - a) / a)
    )
    # u at the open endpoints can underflow to exactly 0
    x = np.maximum(x, np.finfo(float).tiny)
    if size is None:
        return float(x)
    return x


def sample_multivariate(spec: MultivariateStableSpec, rng: np.random.Generator, size=None):
    """Draw d-dimensional stable vectors; shape ``(d,)`` or ``(size, d)``.

    Elliptic laws use the sub-Gaussian construction ``sqrt(A) G`` and
    independent-component laws draw each coordinate with its own index.
    """
    n = 1 if size is None else int(size)
    d = spec.dim
    if spec.kind == "elliptic":
        alpha = float(spec.alphas[0])
        g = np.sqrt(2.0) * rng.standard_normal((n, d))
        if alpha < 2.0:
            a = sample_positive_stable(alpha / 2.0, rng, size=n)
            g *= np.sqrt(a)[:, None]
        out = g
    else:
        u = rng.uniform(-np.pi / 2, np.pi / 2, size=(n, d))
        e = rng.standard_exponential(size=(n, d))
        out = np.empty((n, d))
        for j, alpha in enumerate(spec.alphas):
            out[:, j] = _cms_standard(float(alpha), u[:, j], e[:, j])
    if size is None:
        return out[0]
    return out


def chf(spec: Union[StableParams, MultivariateStableSpec], omega) -> float:
    """Analytic characteristic function at frequency ``omega``.

    All laws here are symmetric, so the value is real and lies in (0, 1].
    """
    omega = np.asarray(omega, dtype=float)
    if not np.all(np.isfinite(omega)):
        raise ValueError("frequency must be finite")
    if isinstance(spec, StableParams):
        if omega.size != 1:
            raise ValueError(f"univariate law needs a scalar frequency, got shape {omega.shape}")
        w = float(omega.reshape(()))
        return float(np.exp(-abs(spec.sigma * w) ** spec.alpha))
    omega = omega.reshape(-1)
    if omega.size != spec.dim:
        raise ValueError(f"frequency has length {omega.size}, law has dimension {spec.dim}")
    if spec.kind == "elliptic":
        return float(np.exp(-np.linalg.norm(omega) ** spec.alphas[0]))
    return float(np.exp(-np.sum(np.abs(omega) ** spec.alphas)))


def empirical_chf(samples, omega) -> float:
    """Mean of ``cos(<omega, X_i>)`` over rows of ``samples``."""
    samples = np.asarray(samples, dtype=float)
    omega = np.asarray(omega, dtype=float)
    if samples.ndim == 1:
        return float(np.mean(np.cos(float(omega.reshape(())) * samples)))
    return float(np.mean(np.cos(samples @ omega.reshape(-1))))
