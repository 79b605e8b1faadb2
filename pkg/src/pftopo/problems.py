"""Builtin benchmark geometries with their reference parameters."""
from __future__ import annotations

from dataclasses import dataclass, field

from .elasticity import LoadSpec
from .errors import ConfigurationError
from .mesh import BoundaryRegion


@dataclass(frozen=True)
class Problem:
    name: str
    description: str
    extents: tuple
    cells: tuple
    loads: LoadSpec
    # defaults a config may override
    material: dict = field(default_factory=dict)
    phase: dict = field(default_factory=dict)
    init: str = "constant"


def _clamp(box, name):
    return BoundaryRegion("dirichlet_zero", box, name=name)


def _pull(box, s, name):
    return BoundaryRegion("traction", box, traction=tuple(float(v) for v in s), name=name)


def _cantilever_mid():
    return Problem(
        "cantilever_mid",
        "2x1 cantilever clamped on x=0, s=(0,-1) on {2}x[0.45,0.55]",
        (2.0, 1.0), (400, 200),
        LoadSpec(dirichlet=[_clamp(((0.0, 0.0), (0.0, 1.0)), "left edge")],
                 tractions=[_pull(((2.0, 2.0), (0.45, 0.55)), (0.0, -1.0), "right edge middle")]),
        phase=dict(gamma=0.2, epsilon=0.01, beta=0.4, dt=0.06, T=6.0),
    )


def _cantilever_corner():
    return Problem(
        "cantilever_corner",
        "2x1 cantilever clamped on x=0, s=(0,-1) on [1.9,2]x{0}",
        (2.0, 1.0), (400, 200),
        LoadSpec(dirichlet=[_clamp(((0.0, 0.0), (0.0, 1.0)), "left edge")],
                 tractions=[_pull(((1.9, 2.0), (0.0, 0.0)), (0.0, -1.0), "bottom right corner")]),
        phase=dict(gamma=0.05, epsilon=0.01, beta=0.2, dt=0.01, T=5.0),
        init="random",
    )


def _cantilever_bottom():
    return Problem(
        "cantilever_bottom",
        "2x1 beam on pads [0,0.05]x{0} and [1.95,2]x{0}, s=(0,-1) on [0.95,1.05]x{0}",
        (2.0, 1.0), (400, 200),
        LoadSpec(dirichlet=[_clamp(((0.0, 0.05), (0.0, 0.0)), "left pad"),
                            _clamp(((1.95, 2.0), (0.0, 0.0)), "right pad")],
                 tractions=[_pull(((0.95, 1.05), (0.0, 0.0)), (0.0, -1.0), "bottom middle")]),
        phase=dict(gamma=0.2, epsilon=0.01, beta=0.4, dt=0.01, T=1.0),
    )


def _bridge():
    return Problem(
        "bridge",
        "2x1 bridge on pads [0,0.05]x{0} and [1.95,2]x{0}, body force f=(0,-0.1), deck load on y=1",
        (2.0, 1.0), (400, 200),
        LoadSpec(dirichlet=[_clamp(((0.0, 0.05), (0.0, 0.0)), "left pad"),
                            _clamp(((1.95, 2.0), (0.0, 0.0)), "right pad")],
                 tractions=[_pull(((0.0, 2.0), (1.0, 1.0)), (0.0, -1.0), "deck")],
                 body_force=(0.0, -0.1)),
        phase=dict(gamma=0.25, epsilon=0.002, beta=0.3, dt=0.002, T=1.0),
        init="deck",
    )


def _cantilever_3d():
    return Problem(
        "cantilever_3d",
        "2x1x1 beam clamped on x=0, s=(0,-1,0) on the strip x=2, y in [0,0.1]",
        (2.0, 1.0, 1.0), (80, 40, 40),
        LoadSpec(dirichlet=[_clamp(((0.0, 0.0), (0.0, 1.0), (0.0, 1.0)), "left face")],
                 tractions=[_pull(((2.0, 2.0), (0.0, 0.1), (0.0, 1.0)), (0.0, -1.0, 0.0),
                                  "lower right edge")]),
        material=dict(E=1.0, nu=0.3),
        phase=dict(gamma=0.2, epsilon=0.01, beta=0.3, dt=0.01, T=2.0),
        init="random",
    )


_CATALOG = {
    "cantilever_mid": _cantilever_mid,
    "cantilever_corner": _cantilever_corner,
    "cantilever_bottom": _cantilever_bottom,
    "bridge": _bridge,
    "cantilever_3d": _cantilever_3d,
}

PROBLEM_IDS = tuple(_CATALOG)


def builtin_problem(name: str) -> Problem:
    try:
        return _CATALOG[name]()
    except KeyError:
        raise ConfigurationError(
            f"unknown problem {name!r}; choose one of {', '.join(PROBLEM_IDS)}") from None


def with_traction(loads: LoadSpec, s) -> LoadSpec:
    """Same loads with every traction vector replaced by ``s``."""
    s = tuple(float(v) for v in s)
    tr = [BoundaryRegion("traction", r.box, traction=s, lumped=r.lumped, name=r.name)
          for r in loads.tractions]
    return LoadSpec(loads.dirichlet, tr, loads.body_force, name=loads.name)
