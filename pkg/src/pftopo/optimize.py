"""Outer optimization loop: projected phase-field steps plus the decay correction."""
from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import RunConfig
from .constraints import partition, project_admissible, scaling_limiter, volume_correction
from .decay import DecayProblem, ObjectiveValue, enforce_decay, objective
from .elasticity import solve_elasticity
from .errors import ConfigurationError, DecayFailure, InfeasibleError, PhaseFieldError
from .io import HistoryRecord, write_history, write_pgm, write_vtk
from .mesh import nodal_measure
from .phasefield import semi_implicit_step

log = logging.getLogger(__name__)

DECK_THICKNESS = 0.05


def threshold_projection(phi, level=0.5):
    return (np.asarray(phi) >= level).astype(float)


def _admissible(phi, V0, measure):
    part = partition(phi, measure)
    phi_hat, _ = volume_correction(phi, part, V0, 1.0, measure)
    return scaling_limiter(phi_hat, part, measure)


def _read_raster(path, grid):
    path = Path(path)
    try:
        data = np.load(path) if path.suffix == ".npy" else np.loadtxt(path)
    except OSError as exc:
        raise ConfigurationError(f"cannot read raster {path}: {exc}") from exc
    data = np.asarray(data, float)
    if data.size != grid.node_count:
        raise ConfigurationError(f"raster {path} has {data.size} values, grid has {grid.node_count} nodes")
    if data.ndim == grid.dim and data.shape != tuple(reversed(grid.node_shape)):
        raise ConfigurationError(f"raster {path} has shape {data.shape}, "
                                 f"expected {tuple(reversed(grid.node_shape))}")
    return data.ravel()


def initialize_phi(config: RunConfig, grid, measure=None):
    """Initial field in the admissible set ``0 <= phi <= 1``, ``int phi = beta |Omega|``."""
    if measure is None:
        measure = nodal_measure(grid)
    V0 = config.beta * float(measure.sum())
    n = grid.node_count
    mode = config.init
    if mode == "constant":
        return np.full(n, config.beta)
    if mode == "random":
        phi = np.random.default_rng(config.seed).random(n)
    elif mode == "raster":
        phi = np.clip(_read_raster(config.raster, grid), 0.0, 1.0)
    elif mode == "deck":
        phi = np.full(n, config.beta)
        top = grid.extents[1]
        phi[grid.coordinates[:, 1] >= top - DECK_THICKNESS - 1e-12] = 1.0
    else:
        raise ConfigurationError(f"unknown init mode {mode!r}")
    return _admissible(phi, V0, measure)


@dataclass
class OptState:
    n: int
    phi: np.ndarray
    u: np.ndarray
    J: ObjectiveValue


@dataclass
class StepInfo:
    lam: float
    eta_max: float
    sigma: float
    secant_iters: int
    cg_iters: int


class Optimizer:
    """Holds the discretized problem and advances :class:`OptState` one step at a time."""

    def __init__(self, config: RunConfig, decay=None):
        self.config = config
        self.grid = config.grid()
        self.loads = config.load_spec()
        self.material = config.material_model()
        self.measure = nodal_measure(self.grid)
        self.V0 = config.beta * float(self.measure.sum())
        self.decay = config.decay if decay is None else decay
        self.dt = config.dt
        self.solver = dict(method=config.linear_solver, rtol=config.elasticity_rtol)

    def solve(self, phi, x0=None):
        return solve_elasticity(self.grid, phi, self.material, self.loads, x0=x0,
                                return_info=True, **self.solver)

    def objective(self, phi, u, dt=None):
        return objective(self.grid, phi, u, self.loads, self.material,
                         self.config.phase_params(dt), self.measure)

    def initial_state(self, phi=None):
        if phi is None:
            phi = initialize_phi(self.config, self.grid, self.measure)
        u, iters = self.solve(phi)
        self._init_cg = iters
        return OptState(0, phi, u, self.objective(phi, u))

    def step(self, state: OptState, dt=None):
        """Projected phase-field step followed (if enabled) by the decay correction."""
        dt = self.dt if dt is None else dt
        params = self.config.phase_params(dt)
        phi_t = semi_implicit_step(self.grid, state.phi, state.u, self.material, self.loads,
                                   params, self.measure, rtol=self.config.phi_rtol)
        proj = project_admissible(phi_t, self.V0, dt, self.measure)
        u_b, cg = self.solve(proj.phi, x0=state.u)
        if self.decay:
            problem = DecayProblem(self.grid, self.loads, self.material, params, self.measure,
                                   self.V0, state.phi, state.J.total, proj.phi,
                                   solver=self.solver, u_guess=u_b)
            res = enforce_decay(problem, u_breve=u_b, cap=self.config.secant_cap)
            new = OptState(state.n + 1, res.phi, res.u, res.J)
            info = StepInfo(proj.lam, float(proj.eta.max()), res.sigma, res.secant_iters,
                            cg + res.cg_iters)
        else:
            new = OptState(state.n + 1, proj.phi, u_b, self.objective(proj.phi, u_b, dt))
            info = StepInfo(proj.lam, float(proj.eta.max()), 0.0, 0, cg)
        return new, info

    def record(self, state, info=None, wall_ms=0.0):
        info = info or StepInfo(0.0, 0.0, 0.0, 0, getattr(self, "_init_cg", 0))
        if not self.config.record_timing:
            wall_ms = 0.0
        return HistoryRecord(state.n, state.J.total, state.J.compliance, state.J.regularization,
                             float(np.sum(self.measure * state.phi)), float(state.phi.min()),
                             float(state.phi.max()), info.lam, info.eta_max, info.sigma,
                             info.secant_iters, info.cg_iters, wall_ms)


def _snapshot(out, grid, state, tag):
    umag = np.linalg.norm(state.u, axis=1)
    write_vtk(out / f"phi_{tag}.vtk", grid, {"phi": state.phi, "u_mag": umag})
    if grid.dim == 2:
        write_pgm(out / f"phi_{tag}.pgm", grid, state.phi)


def _write_final(out, grid, state):
    umag = np.linalg.norm(state.u, axis=1)
    binary = threshold_projection(state.phi)
    write_vtk(out / "final.vtk", grid, {"phi": state.phi, "u_mag": umag})
    write_vtk(out / "final_threshold.vtk", grid, {"phi": binary, "u_mag": umag})
    if grid.dim == 2:
        write_pgm(out / "final.pgm", grid, state.phi)
        write_pgm(out / "final_threshold.pgm", grid, binary)


def write_outputs(out_dir, grid, state, history, summary=None):
    """History CSV, final raw and thresholded fields, and ``summary.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_history(out / "history.csv", history)
    _write_final(out, grid, state)
    if summary is not None:
        (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")


def run(config: RunConfig, *, write=True, callback=None):
    """Optimize until ``N_max`` steps or ``|J_{n+1} - J_n| <= tol``.

    Returns a summary dict with ``status`` (``"converged"``, ``"max_iterations"``
    or ``"aborted"``), the history records and the final state.  On an error the
    last accepted state is still written out.
    """
    cfg = config
    opt = Optimizer(cfg)
    out = Path(cfg.output_dir)
    if write:
        out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    state = opt.initial_state()
    history = [opt.record(state, wall_ms=1e3 * (time.perf_counter() - t0))]
    if write and cfg.snapshot_every:
        _snapshot(out, opt.grid, state, f"{0:05d}")
    status, message = "max_iterations", ""
    halvings = cfg.dt_halvings
    retryable = (DecayFailure, InfeasibleError) if cfg.retry_infeasible else (DecayFailure,)
    n_max = cfg.iterations
    while state.n < n_max:
        t0 = time.perf_counter()
        try:
            while True:
                try:
                    new, info = opt.step(state)
                    break
                except retryable as exc:
                    if halvings == 0:
                        raise
                    halvings -= 1
                    opt.dt = 0.5 * opt.dt
                    log.warning("step %d: %s; retrying with dt = %g", state.n + 1, exc, opt.dt)
        except PhaseFieldError as exc:
            status, message = "aborted", f"step {state.n + 1}: {type(exc).__name__}: {exc}"
            log.error(message)
            break
        dJ = new.J.total - state.J.total
        state = new
        history.append(opt.record(state, info, 1e3 * (time.perf_counter() - t0)))
        log.info("it %4d  J %.10g  dJ %+.3e  sigma %g  secant %d", state.n, state.J.total, dJ,
                 info.sigma, info.secant_iters)
        if callback is not None:
            callback(state, history[-1])
        if write and cfg.snapshot_every and state.n % cfg.snapshot_every == 0:
            _snapshot(out, opt.grid, state, f"{state.n:05d}")
        if abs(dJ) <= cfg.tol:
            status = "converged"
            break
    summary = {
        "status": status,
        "message": message,
        "iterations": state.n,
        "J_final": state.J.total,
        "J_compliance": state.J.compliance,
        "J_regularization": state.J.regularization,
        "dt_final": opt.dt,
        "decay": opt.decay,
    }
    if write:
        write_outputs(out, opt.grid, state, history, summary)
    summary["history"] = history
    summary["state"] = state
    return summary
