"""Experiment configuration, validation and seed derivation.

A config file is YAML (JSON is accepted too)::

    kind: synth-gap
    seed: 7
    repetitions: 20
    params:
      alphas: [1.0, 1.5, 2.0]
      ns: [100, 1000, 10000]

Unknown keys and out-of-range values are rejected before any work starts.

Seeding: every task gets its own generator seeded with
``child_seed(master, *path)``, the first 8 bytes (little-endian) of
``blake2b("<master>/<p1>/<p2>/...")``. Path components are rendered with
``repr`` for floats and ``str`` otherwise, so ``("trajectory", 3, 1.5)``
becomes ``"7/trajectory/3/1.5"``. Results therefore do not depend on the
order or thread in which tasks run.
"""

from __future__ import annotations

import copy
import hashlib
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "DEFAULTS",
    "KINDS",
    "child_seed",
    "task_rng",
    "load_config",
]


class ConfigError(ValueError):
    pass


def _component(p) -> str:
    if isinstance(p, float):
        return repr(p)
    return str(p)


def child_seed(master: int, *path) -> int:
    text = "/".join([str(int(master))] + [_component(p) for p in path])
    return int.from_bytes(hashlib.blake2b(text.encode(), digest_size=8).digest(), "little")


def task_rng(master: int, *path) -> np.random.Generator:
    return np.random.default_rng(child_seed(master, *path))


DEFAULTS = {
    "simulate": {
        "process": "levy",
        "family": "elliptic",
        "alpha": 1.5,
        "alphas": None,
        "dim": 2,
        "horizon": 1.0,
        "step": 1e-4,
        "drift": "none",
        "gaussian_coeff": 0.0,
        "stable_coeff": 1.0,
        "initial": None,
        "cap": 1e12,
        "save_trajectories": True,
    },
    "dimension": {
        "alphas": [1.0, 1.25, 1.5, 1.75, 2.0],
        "dim": 2,
        "points": 100_000,
        "scale_count": 18,
        "min_count": 100,
        "max_fraction": 0.1,
        "min_scales": 4,
    },
    "tailindex": {
        "group_alphas": [1.3, 1.7],
        "coords_per_group": 10,
        "steps": 10_000,
        "k1": None,
        "scale": "group",
    },
    "synth-gap": {
        "alphas": [1.0, 1.5, 2.0],
        "ns": [100, 1000, 10000],
        "dim": 10,
        "population": 100_000,
        "step": 1e-3,
        "horizon": 1.0,
        "subsets": 20,
        "chunk": 10_000,
    },
    "mlp-gap": {
        "depths": [1, 2, 3],
        "etas": [1e-2, 1e-3],
        "batches": [32, 128],
        "width": 64,
        "dim": 10,
        "n_train": 1000,
        "n_test": 10_000,
        "epochs": 100,
        "window_epochs": 1,
        "scale": "group",
        "converged_accuracy": 0.6,
    },
    "bound": {
        "loss_bound_B": 1.0,
        "lipschitz_L": 1.0,
        "n": 10_000,
        "gamma": 0.1,
        "d_H": 1.0,
        "coupling_M": 1.0,
        "diameter": None,
        "rho": "log",
        "sweep": "d_H",
        "values": [0.25, 0.5, 1.0, 1.5, 2.0],
    },
}

KINDS = tuple(DEFAULTS)

# repetitions used when the config does not say
DEFAULT_REPETITIONS = {
    "simulate": 1, "dimension": 20, "tailindex": 20, "synth-gap": 20, "mlp-gap": 1, "bound": 1,
}


def _positive(name, v, integer=False):
    if integer and (not isinstance(v, (int, np.integer)) or isinstance(v, bool)):
        raise ConfigError(f"{name} must be an integer, got {v!r}")
    if not isinstance(v, (int, float, np.integer, np.floating)) or isinstance(v, bool) or not v > 0:
        raise ConfigError(f"{name} must be positive, got {v!r}")


def _alpha(name, v):
    if not isinstance(v, (int, float)) or isinstance(v, bool) or not (0 < v <= 2):
        raise ConfigError(f"{name} must lie in (0, 2], got {v!r}")


def _alpha_list(name, vs):
    if not isinstance(vs, (list, tuple)) or not vs:
        raise ConfigError(f"{name} must be a non-empty list")
    for v in vs:
        _alpha(name, v)


def _int_list(name, vs):
    if not isinstance(vs, (list, tuple)) or not vs:
        raise ConfigError(f"{name} must be a non-empty list")
    for v in vs:
        _positive(name, v, integer=True)


def _validate_params(kind: str, p: dict) -> None:
    if kind == "simulate":
        if p["process"] not in ("levy", "sde"):
            raise ConfigError(f"process must be 'levy' or 'sde', got {p['process']!r}")
        if p["family"] not in ("elliptic", "independent"):
            raise ConfigError(f"family must be 'elliptic' or 'independent', got {p['family']!r}")
        _positive("dim", p["dim"], integer=True)
        if p["family"] == "independent":
            if p["alphas"] is None:
                raise ConfigError("independent family needs 'alphas'")
            _alpha_list("alphas", p["alphas"])
            if len(p["alphas"]) != p["dim"]:
                raise ConfigError("len(alphas) must equal dim")
        else:
            _alpha("alpha", p["alpha"])
        _positive("horizon", p["horizon"])
        _positive("step", p["step"])
        if p["step"] > p["horizon"]:
            raise ConfigError("step must not exceed horizon")
        if p["drift"] not in ("none", "quadratic"):
            raise ConfigError(f"drift must be 'none' or 'quadratic', got {p['drift']!r}")
        _positive("cap", p["cap"])
        if p["initial"] is not None and len(p["initial"]) != p["dim"]:
            raise ConfigError("initial point must have length dim")
    elif kind == "dimension":
        _alpha_list("alphas", p["alphas"])
        for key in ("dim", "points", "scale_count", "min_count", "min_scales"):
            _positive(key, p[key], integer=True)
        if not 0 < p["max_fraction"] <= 1:
            raise ConfigError("max_fraction must lie in (0, 1]")
    elif kind == "tailindex":
        _alpha_list("group_alphas", p["group_alphas"])
        _positive("coords_per_group", p["coords_per_group"], integer=True)
        _positive("steps", p["steps"], integer=True)
        if p["k1"] is not None:
            _positive("k1", p["k1"], integer=True)
        if p["scale"] not in ("group", "coordinate"):
            raise ConfigError("scale must be 'group' or 'coordinate'")
    elif kind == "synth-gap":
        _alpha_list("alphas", p["alphas"])
        _int_list("ns", p["ns"])
        for key in ("dim", "population", "subsets", "chunk"):
            _positive(key, p[key], integer=True)
        if max(p["ns"]) > p["population"]:
            raise ConfigError("training set size exceeds the population")
        _positive("step", p["step"])
        _positive("horizon", p["horizon"])
    elif kind == "mlp-gap":
        _int_list("depths", p["depths"])
        _int_list("batches", p["batches"])
        if not p["etas"]:
            raise ConfigError("etas must be non-empty")
        for e in p["etas"]:
            _positive("eta", e)
        for key in ("width", "dim", "n_train", "n_test", "window_epochs"):
            _positive(key, p[key], integer=True)
        if not isinstance(p["epochs"], int) or p["epochs"] < p["window_epochs"]:
            raise ConfigError("epochs must be an integer >= window_epochs")
        if max(p["batches"]) > p["n_train"]:
            raise ConfigError("batch size exceeds the training set")
        if p["scale"] not in ("group", "coordinate"):
            raise ConfigError("scale must be 'group' or 'coordinate'")
    elif kind == "bound":
        from .bounds import BoundInputs

        if p["sweep"] not in ("d_H", "n", "gamma", "loss_bound_B", "coupling_M", "lipschitz_L"):
            raise ConfigError(f"cannot sweep over {p['sweep']!r}")
        if p["rho"] not in ("log", "loglog"):
            raise ConfigError("rho must be 'log' or 'loglog'")
        if not p["values"]:
            raise ConfigError("values must be non-empty")
        for v in p["values"]:
            q = dict(p, **{p["sweep"]: v})
            try:
                BoundInputs(q["loss_bound_B"], q["lipschitz_L"], q["n"], q["gamma"], q["d_H"],
                            q["coupling_M"], q["diameter"])
            except (ValueError, TypeError) as exc:
                raise ConfigError(f"{p['sweep']}={v!r}: {exc}") from exc


@dataclass
class ExperimentConfig:
    kind: str
    seed: int = 0
    repetitions: int | None = None
    params: dict = field(default_factory=dict)
    time_budget: float | None = None

    def __post_init__(self):
        if self.kind not in DEFAULTS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}; choose from {', '.join(KINDS)}")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or not 0 <= self.seed < 2 ** 64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if self.repetitions is None:
            self.repetitions = DEFAULT_REPETITIONS[self.kind]
        _positive("repetitions", self.repetitions, integer=True)
        if self.time_budget is not None:
            _positive("time_budget", self.time_budget)
        unknown = set(self.params) - set(DEFAULTS[self.kind])
        if unknown:
            raise ConfigError(f"unknown {self.kind} parameter(s): {', '.join(sorted(unknown))}")
        merged = copy.deepcopy(DEFAULTS[self.kind])
        merged.update(self.params)
        _validate_params(self.kind, merged)
        self.params = merged

    def resolved(self) -> dict:
        return {"kind": self.kind, "seed": self.seed, "repetitions": self.repetitions,
                "time_budget": self.time_budget, "params": self.params}

    @property
    def config_hash(self) -> str:
        """Short hash of everything that affects the results."""
        text = json.dumps(self.resolved(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a mapping")
        extra = set(data) - {"kind", "seed", "repetitions", "params", "time_budget"}
        if extra:
            raise ConfigError(f"unknown top-level key(s): {', '.join(sorted(extra))}")
        if "kind" not in data:
            raise ConfigError("config needs a 'kind'")
        return cls(kind=data["kind"], seed=data.get("seed", 0), repetitions=data.get("repetitions"),
                   params=dict(data.get("params") or {}), time_budget=data.get("time_budget"))


class _Loader(yaml.SafeLoader):
    pass


# YAML 1.1 wants a dot in floats; accept plain exponent forms like 1e-3
_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^[-+]?(?:[0-9][0-9_]*\.[0-9_]*(?:[eE][-+]?[0-9]+)?
                  |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
                  |[0-9][0-9_]*[eE][-+]?[0-9]+
                  |\.(?:inf|Inf|INF)|\.(?:nan|NaN|NAN))$""", re.X),
    list("-+0123456789."),
)


def load_config(path) -> dict:
    """Read a YAML/JSON config file into a plain dict (not yet validated)."""
    text = Path(path).read_text()
    try:
        data = yaml.load(text, Loader=_Loader)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return data or {}
