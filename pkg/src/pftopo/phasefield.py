"""Ginzburg-Landau regularization and the semi-implicit Allen-Cahn type step.

The mass matrix is lumped onto the trapezoid nodal measure and the double-well
term is integrated with the same vertex rule, so ``sum(m * F(phi))`` and the
nodal ``F'(phi)`` used in the update are mutually consistent.  The gradient
term uses 2-point Gauss quadrature, which is exact for Q1 fields.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .elasticity import sensitivity_load
from .errors import ConfigurationError, SolverError
from .mesh import StructuredGrid, element_basis, nodal_measure


@dataclass(frozen=True)
class PhaseParams:
    gamma: float
    epsilon: float
    dt: float

    def __post_init__(self):
        for name in ("gamma", "epsilon", "dt"):
            v = getattr(self, name)
            if not np.isfinite(v) or v <= 0:
                raise ConfigurationError(f"{name} must be positive, got {v}")


def double_well(phi):
    return 0.25 * phi**2 * (1.0 - phi) ** 2


def double_well_derivative(phi):
    return 0.5 * phi * (1.0 - phi) * (1.0 - 2.0 * phi)


@lru_cache(maxsize=16)
def laplacian_matrix(grid: StructuredGrid):
    """Neumann stiffness ``K_ij = int grad N_i . grad N_j`` as CSR."""
    _, dN, w = element_basis(grid)
    Ke = np.einsum("q,qad,qbd->ab", w, dN, dN)
    conn = grid.connectivity
    nen = conn.shape[1]
    rows = np.repeat(conn, nen, axis=1).ravel()
    cols = np.tile(conn, (1, nen)).ravel()
    vals = np.broadcast_to(Ke.ravel(), (len(conn), nen * nen)).ravel()
    n = grid.node_count
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def ginzburg_landau_energy(grid, phi, gamma, epsilon, measure=None):
    """``gamma * int (eps/2)|grad phi|^2 + F(phi)/eps``."""
    if measure is None:
        measure = nodal_measure(grid)
    phi = np.asarray(phi, float)
    grad = 0.5 * epsilon * float(phi @ (laplacian_matrix(grid) @ phi))
    well = float(np.sum(measure * double_well(phi))) / epsilon
    return gamma * (grad + well)


def ginzburg_landau_gradient(grid, phi, gamma, epsilon, measure=None):
    """Dual vector: derivative of :func:`ginzburg_landau_energy` w.r.t. nodal phi."""
    if measure is None:
        measure = nodal_measure(grid)
    phi = np.asarray(phi, float)
    return gamma * (epsilon * (laplacian_matrix(grid) @ phi)
                    + measure * double_well_derivative(phi) / epsilon)


def implicit_operator(grid, params: PhaseParams, measure=None):
    """``M + dt * gamma * eps * K`` with lumped ``M``."""
    if measure is None:
        measure = nodal_measure(grid)
    c = params.dt * params.gamma * params.epsilon
    return (sp.diags(measure) + c * laplacian_matrix(grid)).tocsr()


def implicit_solve(grid, rhs, params, measure=None, *, rtol=1e-10, x0=None):
    """Solve ``(M + dt gamma eps K) x = rhs`` by Jacobi-preconditioned CG."""
    A = implicit_operator(grid, params, measure)
    bnorm = np.linalg.norm(rhs)
    if bnorm == 0.0:
        return np.zeros_like(rhs)
    M = sp.diags(1.0 / A.diagonal())
    x, info = spla.cg(A, rhs, x0=x0, rtol=rtol, atol=0.0, maxiter=20 * grid.node_count, M=M)
    if info != 0:
        res = np.linalg.norm(rhs - A @ x) / bnorm
        raise SolverError(f"phase-field CG did not converge (relative residual {res:.3e})",
                          residual=res, iterations=info)
    return x


def semi_implicit_step(grid, phi_n, u, material, loads, params: PhaseParams, measure=None,
                       *, rtol=1e-10):
    """One pseudo-time step: implicit diffusion, explicit double-well and elastic reaction.

    Solves ``(M + dt gamma eps K) phi = M [phi_n + dt(-(gamma/eps) F'(phi_n) + s)]``
    where ``s`` is the nodal elastic sensitivity for displacement ``u``.
    """
    if measure is None:
        measure = nodal_measure(grid)
    phi_n = np.asarray(phi_n, float)
    reaction = -(params.gamma / params.epsilon) * double_well_derivative(phi_n)
    rhs = measure * (phi_n + params.dt * reaction)
    rhs = rhs + params.dt * sensitivity_load(grid, phi_n, u, material, loads)
    return implicit_solve(grid, rhs, params, measure, rtol=rtol, x0=phi_n)
