"""Bound and volume projections applied after each phase-field step.

The chain is: pointwise cut-off to ``[0, 1]`` (bound multiplier ``eta``), a
constant shift on the free nodes to restore the volume (multiplier
``lambda``), and a linear scaling limiter that pulls the free nodes back
inside ``[0, 1]`` about their measure-weighted mean, which leaves the volume
untouched.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleError

_ROUNDING = 1e-12


def cutoff_projection(phi_tilde, dt):
    """Clamp to ``[0, 1]`` and return the KKT multiplier of the clamp.

    Returns ``(phi_ring, eta)`` with ``eta = -phi/dt`` where ``phi <= 0``,
    ``(phi - 1)/dt`` where ``phi >= 1`` and zero in between.
    """
    phi_tilde = np.asarray(phi_tilde, float)
    low = phi_tilde <= 0.0
    high = phi_tilde >= 1.0
    phi_ring = np.where(low, 0.0, np.where(high, 1.0, phi_tilde))
    eta = np.zeros_like(phi_tilde)
    eta[low] = -phi_tilde[low] / dt
    eta[high] = (1.0 - phi_tilde[high]) / (-dt)
    return phi_ring, np.maximum(eta, 0.0)


@dataclass(frozen=True)
class Partition:
    """Nodes pinned at exactly 0 or 1 (``d1``) and the free rest (``d2``)."""

    d1: np.ndarray
    d2: np.ndarray
    d2_measure: float

    @property
    def d2_empty(self):
        return not self.d2.any()


def partition(phi, measure) -> Partition:
    """Split nodes by exact equality with 0.0 or 1.0 (cut-off writes exact constants)."""
    phi = np.asarray(phi, float)
    d1 = (phi == 0.0) | (phi == 1.0)
    d2 = ~d1
    return Partition(d1, d2, float(np.sum(np.asarray(measure)[d2])))


def volume_correction(phi_ring, part: Partition, V0, dt, measure):
    """Shift the free nodes by a constant so that ``sum(measure * phi) == V0``.

    Returns ``(phi_hat, lam)`` where ``lam = (V0 - int phi_ring) / (dt |D2|)``;
    its sign is unrestricted because the volume constraint is an equality.
    """
    phi_ring = np.asarray(phi_ring, float)
    mismatch = V0 - float(np.sum(measure * phi_ring))
    if mismatch == 0.0:
        return phi_ring.copy(), 0.0
    if part.d2_empty:
        if abs(mismatch) <= _ROUNDING * max(abs(V0), 1.0):
            return phi_ring.copy(), 0.0
        raise InfeasibleError(f"no free nodes left to absorb a volume mismatch of {mismatch:.3e}")
    shift = mismatch / part.d2_measure
    phi_hat = phi_ring.copy()
    phi_hat[part.d2] += shift
    return phi_hat, shift / dt


def _mean_and_theta(vals, weights, total):
    mean = float(np.sum(weights * vals)) / total
    if not -_ROUNDING <= mean <= 1.0 + _ROUNDING:
        raise InfeasibleError(f"mean over free nodes is {mean:.6g}, outside [0, 1]; "
                              "the target volume is incompatible with the pinned nodes")
    mean = min(max(mean, 0.0), 1.0)
    vmax, vmin = vals.max(), vals.min()
    theta = 1.0
    # a subnormal gap overflows to inf, which min() then discards
    with np.errstate(over="ignore"):
        if vmax != mean:
            theta = min(theta, abs((1.0 - mean) / (vmax - mean)))
        if vmin != mean:
            theta = min(theta, abs(-mean / (vmin - mean)))
    return mean, float(theta)


def limiter_theta(phi_hat, part: Partition, measure):
    """The factor :func:`scaling_limiter` applies (1.0 when nothing is limited)."""
    vals = np.asarray(phi_hat, float)[part.d2]
    if vals.size == 0:
        return 1.0
    return _mean_and_theta(vals, np.asarray(measure)[part.d2], part.d2_measure)[1]


def scaling_limiter(phi_hat, part: Partition, measure):
    """Shrink the free nodes toward their weighted mean until they fit in ``[0, 1]``.

    ``theta = min(|1 - m| / |max - m|, |m| / |min - m|, 1)`` with ``m`` the
    weighted mean over ``D2``; a term whose denominator vanishes is skipped.
    Pinned nodes are returned untouched.
    """
    phi_hat = np.asarray(phi_hat, float)
    out = phi_hat.copy()
    if part.d2_empty:
        return out
    vals = phi_hat[part.d2]
    mean, theta = _mean_and_theta(vals, np.asarray(measure)[part.d2], part.d2_measure)
    if theta < 1.0:
        vals = theta * (vals - mean) + mean
    # theta puts the extremes on the bounds only up to rounding (and rounds to
    # 1.0 for overshoots far below machine epsilon)
    out[part.d2] = np.clip(vals, 0.0, 1.0)
    return out


@dataclass
class Projection:
    phi: np.ndarray
    eta: np.ndarray
    lam: float
    partition: Partition


def project_admissible(phi_tilde, V0, dt, measure) -> Projection:
    """Cut-off, volume shift and limiter in sequence."""
    phi_ring, eta = cutoff_projection(phi_tilde, dt)
    part = partition(phi_ring, measure)
    phi_hat, lam = volume_correction(phi_ring, part, V0, dt, measure)
    return Projection(scaling_limiter(phi_hat, part, measure), eta, lam, part)
