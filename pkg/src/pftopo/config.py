"""Run configuration: a flat ``key = value`` TOML file with dotted sections.

Example::

    problem.id = "cantilever_mid"
    problem.cells = [160, 80]
    phase.dt = 0.05
    solver.decay = false
    output.dir = "out/case1"

Every key is listed in :data:`KEYS`; anything else is rejected.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .elasticity import LoadSpec, MaterialModel
from .errors import ConfigurationError
from .mesh import BoundaryRegion, build_grid
from .phasefield import PhaseParams
from .problems import builtin_problem, with_traction

INIT_MODES = ("constant", "random", "raster", "deck")
LINEAR_SOLVERS = ("cg", "amg", "direct")


@dataclass
class RunConfig:
    problem: str | None = None
    extents: tuple | None = None
    cells: tuple | None = None
    dirichlet: list | None = None
    traction_boxes: list | None = None
    tractions: list | None = None
    traction: tuple | None = None
    body_force: tuple | None = None
    init: str | None = None
    seed: int | None = None
    raster: str | None = None

    E: float | None = None
    nu: float | None = None
    e_min: float = 1e-4
    f_min: float = 1e-4
    p: float = 3.0

    gamma: float | None = None
    epsilon: float | None = None
    dt: float | None = None
    T: float | None = None
    beta: float | None = None

    elasticity_rtol: float = 1e-8
    phi_rtol: float = 1e-10
    tol: float = 1e-6
    n_max: int | None = None
    secant_cap: int = 30
    linear_solver: str = "amg"
    decay: bool = True
    dt_halvings: int = 1
    retry_infeasible: bool = False

    output_dir: str = "output"
    snapshot_every: int = 10
    record_timing: bool = True

    _problem_obj: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.resolve()

    def resolve(self):
        """Fill problem defaults and validate; idempotent."""
        prob = builtin_problem(self.problem) if self.problem else None
        self._problem_obj = prob
        if prob is not None:
            self.extents = self.extents or prob.extents
            self.cells = self.cells or prob.cells
            for k, v in prob.phase.items():
                if getattr(self, k) is None:
                    setattr(self, k, v)
            for k, v in prob.material.items():
                if getattr(self, k) is None:
                    setattr(self, k, v)
            if self.init is None:
                self.init = prob.init
        if self.E is None:
            self.E = 100.0 / 91.0
        if self.nu is None:
            self.nu = 3.0 / 7.0
        if self.init is None:
            self.init = "constant"
        missing = [k for k in ("extents", "cells", "gamma", "epsilon", "dt", "T", "beta")
                   if getattr(self, k) is None]
        if missing:
            raise ConfigurationError(f"missing required settings: {', '.join(missing)}")
        self.extents = tuple(float(x) for x in self.extents)
        self.cells = tuple(int(c) for c in self.cells)
        if prob is None and not self.dirichlet:
            raise ConfigurationError("problem.dirichlet is required without a builtin problem.id")
        if not 0.0 < self.beta < 1.0:
            raise ConfigurationError(f"phase.beta must lie in (0, 1), got {self.beta}")
        if self.T <= 0:
            raise ConfigurationError(f"phase.T must be positive, got {self.T}")
        if self.init not in INIT_MODES:
            raise ConfigurationError(f"problem.init must be one of {INIT_MODES}, got {self.init!r}")
        if self.init == "random" and self.seed is None:
            raise ConfigurationError("problem.seed is required when problem.init = 'random'")
        if self.init == "raster" and not self.raster:
            raise ConfigurationError("problem.raster is required when problem.init = 'raster'")
        if self.linear_solver not in LINEAR_SOLVERS:
            raise ConfigurationError(f"solver.linear must be one of {LINEAR_SOLVERS}")
        for k in ("elasticity_rtol", "phi_rtol", "tol"):
            if getattr(self, k) <= 0:
                raise ConfigurationError(f"{k} must be positive")
        if self.secant_cap < 1:
            raise ConfigurationError("solver.secant_cap must be >= 1")
        if self.n_max is not None and self.n_max < 1:
            raise ConfigurationError("solver.n_max must be >= 1")
        if self.dt_halvings < 0:
            raise ConfigurationError("solver.dt_halvings must be >= 0")
        if self.snapshot_every < 0:
            raise ConfigurationError("output.snapshot_every must be >= 0")
        try:
            PhaseParams(self.gamma, self.epsilon, self.dt)
        except ConfigurationError as exc:
            raise ConfigurationError(f"phase.*: {exc}") from None
        try:
            self.material_model()
        except ConfigurationError as exc:
            raise ConfigurationError(f"material.*: {exc}") from None
        return self

    @property
    def iterations(self) -> int:
        if self.n_max is not None:
            return self.n_max
        return max(1, math.ceil(self.T / self.dt - 1e-9))

    def grid(self):
        return build_grid(self.extents, self.cells)

    def material_model(self):
        return MaterialModel(self.E, self.nu, self.e_min, self.f_min, self.p, len(self.extents))

    def phase_params(self, dt=None):
        return PhaseParams(self.gamma, self.epsilon, self.dt if dt is None else dt)

    def load_spec(self):
        prob = self._problem_obj
        if prob is not None and self.dirichlet is None and self.traction_boxes is None:
            loads = prob.loads
        else:
            clamps = [BoundaryRegion("dirichlet_zero", _box(b), name=f"dirichlet[{i}]")
                      for i, b in enumerate(self.dirichlet or [])]
            boxes = self.traction_boxes or []
            vecs = self.tractions or []
            if len(boxes) != len(vecs):
                raise ConfigurationError("problem.traction_boxes and problem.tractions differ in length")
            pulls = [BoundaryRegion("traction", _box(b), traction=tuple(map(float, s)),
                                    name=f"traction[{i}]")
                     for i, (b, s) in enumerate(zip(boxes, vecs))]
            if prob is not None:
                clamps = clamps or list(prob.loads.dirichlet)
                pulls = pulls if self.traction_boxes is not None else list(prob.loads.tractions)
            loads = LoadSpec(clamps, pulls, prob.loads.body_force if prob else None)
        if self.traction is not None:
            loads = with_traction(loads, self.traction)
        if self.body_force is not None:
            loads = LoadSpec(loads.dirichlet, loads.tractions, tuple(self.body_force))
        return loads

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


def _box(b):
    try:
        return tuple((float(lo), float(hi)) for lo, hi in b)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"boundary box must be a list of [lo, hi] pairs, got {b!r}") from exc


# dotted key -> RunConfig field
KEYS = {
    "problem.id": "problem",
    "problem.extents": "extents",
    "problem.cells": "cells",
    "problem.dirichlet": "dirichlet",
    "problem.traction_boxes": "traction_boxes",
    "problem.tractions": "tractions",
    "problem.traction": "traction",
    "problem.body_force": "body_force",
    "problem.init": "init",
    "problem.seed": "seed",
    "problem.raster": "raster",
    "material.E": "E",
    "material.nu": "nu",
    "material.e_min": "e_min",
    "material.f_min": "f_min",
    "material.p": "p",
    "phase.gamma": "gamma",
    "phase.epsilon": "epsilon",
    "phase.dt": "dt",
    "phase.T": "T",
    "phase.beta": "beta",
    "solver.elasticity_rtol": "elasticity_rtol",
    "solver.phi_rtol": "phi_rtol",
    "solver.tol": "tol",
    "solver.n_max": "n_max",
    "solver.secant_cap": "secant_cap",
    "solver.linear": "linear_solver",
    "solver.decay": "decay",
    "solver.dt_halvings": "dt_halvings",
    "solver.retry_infeasible": "retry_infeasible",
    "output.dir": "output_dir",
    "output.snapshot_every": "snapshot_every",
    "output.record_timing": "record_timing",
}

_TYPES = {
    "problem": str, "init": str, "raster": str, "linear_solver": str, "output_dir": str,
    "seed": int, "n_max": int, "secant_cap": int, "snapshot_every": int, "dt_halvings": int,
    "decay": bool, "retry_infeasible": bool, "record_timing": bool,
    "extents": list, "cells": list, "dirichlet": list, "traction_boxes": list,
    "tractions": list, "traction": list, "body_force": list,
}


def _flatten(d, prefix=""):
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            yield from _flatten(v, key + ".")
        else:
            yield key, v


def _coerce(key, name, value):
    kind = _TYPES.get(name, float)
    if kind is bool:
        if not isinstance(value, bool):
            raise ConfigurationError(f"{key}: expected true/false, got {value!r}")
        return value
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigurationError(f"{key}: expected an integer, got {value!r}")
        return value
    if kind is str:
        if not isinstance(value, str):
            raise ConfigurationError(f"{key}: expected a string, got {value!r}")
        return value
    if kind is list:
        if not isinstance(value, list):
            raise ConfigurationError(f"{key}: expected an array, got {value!r}")
        return tuple(value) if name in ("extents", "cells", "traction", "body_force") else value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigurationError(f"{key}: expected a number, got {value!r}")
    return float(value)


def config_from_mapping(data: dict, base_dir=None) -> RunConfig:
    kwargs = {}
    for key, value in _flatten(data):
        if key not in KEYS:
            raise ConfigurationError(f"unknown configuration key {key!r}")
        name = KEYS[key]
        kwargs[name] = _coerce(key, name, value)
    if base_dir is not None and kwargs.get("raster"):
        raster = Path(kwargs["raster"])
        if not raster.is_absolute():
            kwargs["raster"] = str(Path(base_dir) / raster)
    try:
        return RunConfig(**kwargs)
    except ConfigurationError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(str(exc)) from exc


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigurationError(f"config file {path} not found") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc
    return config_from_mapping(data, base_dir=path.parent)
