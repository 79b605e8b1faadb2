"""Objective evaluation and the sigma correction that forces monotone decay.

After the projected step produces ``phi_breve``, candidates of the form
``V0 (phi_breve + sigma) / int(phi_breve + sigma)`` (re-limited into
``[0, 1]``) are searched with the secant method on

    F(sigma) = J(phi(sigma)) - J(phi_n) + ||phi(sigma) - phi_n||^2 / dt,

stopping as soon as a candidate does not increase ``J``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .constraints import partition, scaling_limiter
from .elasticity import compliance, solve_elasticity
from .errors import (DecayFailure, InfeasibleError, MultiplierError, SolverError,
                     StalledSecantError)
from .phasefield import ginzburg_landau_energy

SIGMA_GUESSES = (-0.5, 0.0)


class ObjectiveValue(NamedTuple):
    total: float
    compliance: float
    regularization: float


def objective(grid, phi, u, loads, material, params, measure=None) -> ObjectiveValue:
    c = compliance(grid, phi, u, loads, material)
    r = ginzburg_landau_energy(grid, phi, params.gamma, params.epsilon, measure)
    return ObjectiveValue(c + r, c, r)


def sigma_candidate(phi_breve, sigma, V0, measure):
    """Rescale ``phi_breve + sigma`` to volume ``V0`` and re-limit into ``[0, 1]``."""
    phi_breve = np.asarray(phi_breve, float)
    if sigma == 0.0:
        return phi_breve.copy()
    denom = float(np.sum(measure * (phi_breve + sigma)))
    if abs(denom) < 1e-12 * float(np.sum(measure)):
        raise MultiplierError(f"sigma = {sigma!r} makes the normalizing integral vanish")
    phi = V0 * (phi_breve + sigma) / denom
    return scaling_limiter(phi, partition(phi, measure), measure)


def secant_step(sigma_s, sigma_prev, F_s, F_prev):
    """``sigma_s - F_s (sigma_s - sigma_prev) / (F_s - F_prev)``."""
    if abs(F_s - F_prev) < 1e-14 * (1.0 + abs(F_s)):
        raise StalledSecantError(f"secant stalled: F({sigma_s!r}) and F({sigma_prev!r}) coincide")
    return sigma_s - F_s * (sigma_s - sigma_prev) / (F_s - F_prev)


@dataclass
class Candidate:
    sigma: float
    phi: np.ndarray
    u: np.ndarray
    J: ObjectiveValue
    F: float
    cg_iters: int = 0


@dataclass
class DecayProblem:
    """Everything needed to evaluate ``F(sigma)`` for one outer iteration."""

    grid: object
    loads: object
    material: object
    params: object
    measure: np.ndarray
    V0: float
    phi_n: np.ndarray
    J_n: float
    phi_breve: np.ndarray
    solver: dict = field(default_factory=dict)
    u_guess: np.ndarray | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    def distance2(self, phi):
        return float(np.sum(self.measure * (phi - self.phi_n) ** 2))

    def candidate(self, sigma, u=None) -> Candidate:
        """Evaluate (and memoize) the candidate for ``sigma``.

        ``u`` may supply an already solved displacement for this candidate.
        """
        sigma = float(sigma)
        if sigma in self._cache:
            return self._cache[sigma]
        phi = sigma_candidate(self.phi_breve, sigma, self.V0, self.measure)
        iters = 0
        if u is None:
            u, iters = solve_elasticity(self.grid, phi, self.material, self.loads,
                                        x0=self.u_guess, return_info=True, **self.solver)
        J = objective(self.grid, phi, u, self.loads, self.material, self.params, self.measure)
        F = J.total - self.J_n + self.distance2(phi) / self.params.dt
        cand = Candidate(sigma, phi, u, J, F, iters)
        self._cache[sigma] = cand
        return cand


def decay_residual(problem: DecayProblem, sigma) -> float:
    return problem.candidate(sigma).F


class DecayResult(NamedTuple):
    phi: np.ndarray
    u: np.ndarray
    J: ObjectiveValue
    sigma: float
    secant_iters: int
    residual: float
    cg_iters: int
    evaluations: list


def enforce_decay(problem: DecayProblem, u_breve=None, *, cap=30, guesses=SIGMA_GUESSES):
    """Return the first candidate with ``J <= J_n``, trying ``sigma = 0`` first.

    Raises :class:`DecayFailure` (carrying the lowest-J candidate) if ``cap``
    secant steps do not produce one.
    """
    log = []

    def done(c, iters):
        total_cg = sum(x.cg_iters for x in problem._cache.values())
        return DecayResult(c.phi, c.u, c.J, c.sigma, iters, c.F, total_cg, log)

    def fail(msg):
        best = min(problem._cache.values(), key=lambda c: c.J.total)
        raise DecayFailure(msg, best={"phi": best.phi, "u": best.u, "J": best.J,
                                      "sigma": best.sigma}, diagnostics=log)

    first = problem.candidate(0.0, u=u_breve)
    log.append((0.0, first.F, first.J.total))
    if first.J.total <= problem.J_n:
        return done(first, 0)

    s0, s1 = guesses
    try:
        c_prev = problem.candidate(s0)
    except MultiplierError:
        # sigma0 sits on the singularity -V0/|Omega|; halve it
        c_prev = problem.candidate(0.5 * s0)
    c_curr = problem.candidate(s1)
    for c in (c_prev, c_curr):
        log.append((c.sigma, c.F, c.J.total))
        if c.J.total <= problem.J_n:
            return done(c, 0)

    for it in range(1, cap + 1):
        try:
            sigma = secant_step(c_curr.sigma, c_prev.sigma, c_curr.F, c_prev.F)
            cand = problem.candidate(sigma)
        except (StalledSecantError, MultiplierError, InfeasibleError, SolverError) as exc:
            fail(f"decay correction aborted at secant step {it}: {exc}")
        log.append((cand.sigma, cand.F, cand.J.total))
        if cand.J.total <= problem.J_n:
            return done(cand, it)
        c_prev, c_curr = c_curr, cand
    fail(f"no objective-decreasing candidate within {cap} secant steps")
