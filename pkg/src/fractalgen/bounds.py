"""Plug-in calculators for the dimension-dependent generalization bounds.

These evaluate the right-hand sides only. The constants (loss bound,
Lipschitz constant, coupling factor) must come from the caller; the bounds
hold for "sufficiently large n", a threshold that cannot be computed, so a
warning is issued below ``n = 100``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

__all__ = [
    "BoundInputs",
    "SmallSampleWarning",
    "theorem1_bound",
    "theorem2_bound",
    "chaining_bound",
    "CHAINING_CONSTANT_SYMBOLIC",
]

SMALL_N = 100

#: the absolute constant of the chaining bound is unknown; results use c = 1
CHAINING_CONSTANT_SYMBOLIC = True


class SmallSampleWarning(UserWarning):
    pass


@dataclass(frozen=True)
class BoundInputs:
    """Constants feeding the bounds.

    ``coupling_M`` is only used by :func:`theorem2_bound`; ``diameter`` and
    ``rho`` only by :func:`chaining_bound` (``rho`` is a function of ``n``,
    default ``log``).
    """

    loss_bound_B: float
    lipschitz_L: float
    n: int
    gamma: float
    d_H: float
    coupling_M: float = 1.0
    diameter: Optional[float] = None
    rho: Optional[Callable[[float], float]] = None
    ambient_dim: Optional[int] = None

    def __post_init__(self):
        if not self.loss_bound_B > 0:
            raise ValueError("loss bound B must be positive")
        if not self.lipschitz_L > 0:
            raise ValueError("Lipschitz constant L must be positive")
        if int(self.n) != self.n or self.n < 2:
            raise ValueError("n must be an integer >= 2")
        if not (0 < self.gamma <= 1):
            raise ValueError("gamma must lie in (0, 1]")
        if not self.d_H >= 0:
            raise ValueError("d_H must be non-negative")
        if self.ambient_dim is not None and self.d_H > self.ambient_dim:
            raise ValueError(f"d_H={self.d_H} exceeds ambient dimension {self.ambient_dim}")
        if not self.coupling_M >= 1:
            raise ValueError("coupling constant M must be >= 1")
        if self.diameter is not None and not self.diameter > 0:
            raise ValueError("diameter must be positive")


def _check_log_regime(inp: BoundInputs) -> float:
    nl2 = inp.n * inp.lipschitz_L ** 2
    if nl2 <= 1:
        raise ValueError(f"n L^2 = {nl2:g} <= 1: log term is not positive")
    if inp.n < SMALL_N:
        warnings.warn(f"n = {inp.n} may be below the (unknown) sample-size threshold",
                      SmallSampleWarning, stacklevel=3)
    return math.log(nl2)


def theorem1_bound(inp: BoundInputs) -> float:
    """``B sqrt(2 d_H log(n L^2) / n + log(1/gamma) / n)``."""
    log_nl2 = _check_log_regime(inp)
    n = inp.n
    return inp.loss_bound_B * math.sqrt(2 * inp.d_H * log_nl2 / n + math.log(1 / inp.gamma) / n)


def theorem2_bound(inp: BoundInputs) -> float:
    """``2B sqrt((d_H + 1) log^2(n L^2) / n + log(7M/gamma) / n)``.

    Here ``d_H`` is the dimension of the single trajectory image, not a
    uniform bound over training sets.
    """
    if not inp.gamma < 1:
        raise ValueError("gamma must lie in (0, 1)")
    log_nl2 = _check_log_regime(inp)
    n = inp.n
    return 2 * inp.loss_bound_B * math.sqrt(
        (inp.d_H + 1) * log_nl2 ** 2 / n + math.log(7 * inp.coupling_M / inp.gamma) / n
    )


def chaining_bound(inp: BoundInputs) -> float:
    """``L B diam sqrt(d_H rho(n) / n + log(1/gamma) / n)``, up to an absolute constant.

    The constant is unknown and taken as 1 (see
    :data:`CHAINING_CONSTANT_SYMBOLIC`).
    """
    if inp.diameter is None:
        raise ValueError("chaining bound needs the diameter of the trajectory set")
    rho = inp.rho or math.log
    n = inp.n
    r = rho(n)
    if not r > 0:
        raise ValueError(f"rho(n) = {r!r} must be positive")
    if n < SMALL_N:
        warnings.warn(f"n = {n} may be below the (unknown) sample-size threshold",
                      SmallSampleWarning, stacklevel=2)
    return inp.lipschitz_L * inp.loss_bound_B * inp.diameter * math.sqrt(
        inp.d_H * r / n + math.log(1 / inp.gamma) / n
    )
