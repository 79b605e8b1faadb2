"""Structured axis-aligned grids of bilinear quads (2D) and trilinear hexes (3D).

Nodes are numbered lexicographically with x fastest.  All geometry needed by
the finite element modules (connectivity, quadrature, lumped measures and
boundary selection) lives here so that the solvers never touch coordinates.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache
import itertools

import numpy as np

from .errors import ConfigurationError

# local corner order: counterclockwise in 2D, lexicographic in 3D
_CORNERS = {
    2: np.array([(0, 0), (1, 0), (1, 1), (0, 1)]),
    3: np.array(list(itertools.product((0, 1), repeat=3)))[:, ::-1],
}
_GAUSS_01 = np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)])


@dataclass(frozen=True)
class StructuredGrid:
    """Uniform tensor-product grid over the box ``[0, L_0] x ... x [0, L_{d-1}]``.

    Use :func:`build_grid` to construct one with validation.
    """

    extents: tuple
    cells: tuple

    @property
    def dim(self) -> int:
        return len(self.extents)

    @cached_property
    def spacing(self) -> np.ndarray:
        return np.asarray(self.extents, float) / np.asarray(self.cells, float)

    @property
    def node_shape(self) -> tuple:
        """Nodes per axis, x first."""
        return tuple(c + 1 for c in self.cells)

    @property
    def node_count(self) -> int:
        return int(np.prod(self.node_shape))

    @property
    def element_count(self) -> int:
        return int(np.prod(self.cells))

    @property
    def volume(self) -> float:
        return float(np.prod(self.extents))

    @cached_property
    def _strides(self) -> np.ndarray:
        return np.concatenate([[1], np.cumprod(self.node_shape)[:-1]]).astype(np.int64)

    def node_multi_index(self, index) -> np.ndarray:
        """Per-axis integer positions of node(s) ``index``; shape ``(..., dim)``."""
        index = np.asarray(index, dtype=np.int64)
        return np.stack([(index // s) % n for s, n in zip(self._strides, self.node_shape)], axis=-1)

    def node_index(self, multi) -> np.ndarray:
        return np.asarray(multi, dtype=np.int64) @ self._strides

    @cached_property
    def coordinates(self) -> np.ndarray:
        """Node coordinates, shape ``(node_count, dim)``."""
        return self.node_multi_index(np.arange(self.node_count)) * self.spacing

    def axis_coordinates(self, axis: int) -> np.ndarray:
        return np.arange(self.cells[axis] + 1) * self.spacing[axis]

    @cached_property
    def connectivity(self) -> np.ndarray:
        """Element-to-node table, shape ``(element_count, 2**dim)``."""
        cells = np.asarray(self.cells)
        cstrides = np.concatenate([[1], np.cumprod(cells)[:-1]])
        e = np.arange(self.element_count, dtype=np.int64)
        emulti = np.stack([(e // s) % c for s, c in zip(cstrides, cells)], axis=-1)
        base = emulti @ self._strides
        offsets = _CORNERS[self.dim] @ self._strides
        return base[:, None] + offsets[None, :]

    @cached_property
    def boundary_mask(self) -> np.ndarray:
        m = self.node_multi_index(np.arange(self.node_count))
        return np.any((m == 0) | (m == np.asarray(self.cells)), axis=1)


def build_grid(extents, cells) -> StructuredGrid:
    """Build a grid with ``cells[a]`` elements along axis ``a`` of length ``extents[a]``.

    >>> g = build_grid((2.0, 1.0), (4, 2))
    >>> g.node_count, g.element_count
    (15, 8)
    """
    extents = tuple(float(x) for x in extents)
    try:
        cells = tuple(int(c) for c in cells)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"cells must be integers, got {cells!r}") from exc
    if len(extents) not in (2, 3):
        raise ConfigurationError(f"dimension must be 2 or 3, got {len(extents)}")
    if len(cells) != len(extents):
        raise ConfigurationError("extents and cells must have the same length")
    if any(not np.isfinite(x) or x <= 0 for x in extents):
        raise ConfigurationError(f"extents must be positive, got {extents}")
    if any(c < 1 for c in cells):
        raise ConfigurationError(f"cell counts must be >= 1, got {cells}")
    return StructuredGrid(extents, cells)


def element_nodes(grid: StructuredGrid, element_index: int) -> tuple:
    if not 0 <= element_index < grid.element_count:
        raise IndexError(f"element {element_index} out of range [0, {grid.element_count})")
    return tuple(int(i) for i in grid.connectivity[element_index])


def nodal_measure(grid: StructuredGrid) -> np.ndarray:
    """Trapezoid-rule node weights; they sum to the domain volume."""
    w = np.ones(1)
    for axis in range(grid.dim):
        w1 = np.full(grid.cells[axis] + 1, grid.spacing[axis])
        w1[[0, -1]] *= 0.5
        # x fastest: the new axis varies slowest
        w = np.outer(w1, w).ravel()
    return w


@lru_cache(maxsize=None)
def element_basis(grid: StructuredGrid):
    """Q1 shape data at the 2-point-per-axis Gauss points of one element.

    Returns ``(N, dN, w)``: values ``(nq, nen)``, physical gradients
    ``(nq, nen, dim)`` and quadrature weights ``(nq,)``.  Every element of a
    uniform grid shares these.
    """
    d = grid.dim
    corners = _CORNERS[d]
    h = grid.spacing
    pts = np.array(list(itertools.product(_GAUSS_01, repeat=d)))[:, ::-1]
    # 1D linear factors: c=0 -> 1-xi, c=1 -> xi
    vals = np.where(corners[None, :, :] == 1, pts[:, None, :], 1.0 - pts[:, None, :])
    dvals = np.where(corners == 1, 1.0, -1.0) / h
    N = vals.prod(axis=2)
    dN = np.empty(vals.shape)
    for a in range(d):
        others = np.delete(vals, a, axis=2).prod(axis=2)
        dN[:, :, a] = others * dvals[None, :, a]
    w = np.full(len(pts), np.prod(h) / 2**d)
    return N, dN, w


@dataclass(frozen=True)
class BoundaryRegion:
    """Axis-aligned selector for a piece of the boundary.

    ``box`` holds one closed interval ``(lo, hi)`` per axis; a face is
    selected by collapsing one interval onto ``0`` or the axis extent.
    ``traction`` is required iff ``kind == "traction"``.  ``lumped`` allows a
    degenerate (point or line) selection; a lumped traction is the total force
    shared equally among the selected nodes.
    """

    kind: str
    box: tuple
    traction: tuple | None = None
    lumped: bool = False
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if self.kind not in ("dirichlet_zero", "traction"):
            raise ConfigurationError(f"unknown boundary kind {self.kind!r}")
        if (self.kind == "traction") != (self.traction is not None):
            raise ConfigurationError(f"region {self.label}: traction vector present iff kind is traction")
        for lo, hi in self.box:
            if lo > hi:
                raise ConfigurationError(f"region {self.label}: empty interval ({lo}, {hi})")

    @property
    def label(self) -> str:
        return self.name or f"{self.kind}{tuple(self.box)}"


def _snap_tol(grid):
    return 0.5 * float(grid.spacing.min()) * (1.0 - 1e-9)


def select_boundary_nodes(grid: StructuredGrid, region: BoundaryRegion) -> np.ndarray:
    """Indices of boundary nodes inside the region box, snapped by half a spacing."""
    if len(region.box) != grid.dim:
        raise ConfigurationError(f"region {region.label} has {len(region.box)} intervals, grid is {grid.dim}D")
    tol = _snap_tol(grid)
    x = grid.coordinates
    lo = np.array([b[0] for b in region.box]) - tol
    hi = np.array([b[1] for b in region.box]) + tol
    mask = np.all((x >= lo) & (x <= hi), axis=1) & grid.boundary_mask
    nodes = np.flatnonzero(mask)
    if nodes.size == 0:
        raise ConfigurationError(f"boundary region {region.label} selects no nodes")
    return nodes


def _face_axis(grid, region):
    """Return ``(axis, side_index)`` of the face the region lies on, or None."""
    tol = _snap_tol(grid)
    hits = []
    for a, (lo, hi) in enumerate(region.box):
        if hi - lo > tol:
            continue
        L = grid.extents[a]
        if abs(lo) <= tol and abs(hi) <= tol:
            hits.append((a, 0))
        elif abs(lo - L) <= tol and abs(hi - L) <= tol:
            hits.append((a, grid.cells[a]))
    if len(hits) > 1:
        # a thin strip along another face: prefer the exactly collapsed interval
        hits = [h for h in hits if region.box[h[0]][0] == region.box[h[0]][1]]
    if len(hits) != 1:
        return None
    a, side = hits[0]
    for b, (lo, hi) in enumerate(region.box):
        if b != a and min(hi, grid.extents[b]) - max(lo, 0.0) <= 0.0:
            return None
    return a, side


def hat_integrals(grid: StructuredGrid, axis: int, lo: float, hi: float) -> np.ndarray:
    """Exact integrals of each 1D hat function of ``axis`` over ``[lo, hi]``."""
    h = grid.spacing[axis]
    xk = np.arange(grid.cells[axis]) * h
    a = np.clip(np.maximum(lo, xk), xk, xk + h)
    b = np.clip(np.minimum(hi, xk + h), xk, xk + h)
    b = np.maximum(a, b)
    len_ = b - a
    sq = 0.5 * (b * b - a * a)
    left = ((xk + h) * len_ - sq) / h
    right = (sq - xk * len_) / h
    out = np.zeros(grid.cells[axis] + 1)
    out[:-1] += left
    out[1:] += right
    return out


def region_is_face(grid: StructuredGrid, region: BoundaryRegion) -> bool:
    return _face_axis(grid, region) is not None


def face_weights(grid: StructuredGrid, region: BoundaryRegion):
    """Consistent load weights ``int_{face cap box} N_i ds`` for a face region.

    Returns ``(nodes, weights)`` with only nonzero weights kept.  Raises
    :class:`ConfigurationError` if the region is not a face of positive measure.
    """
    fa = _face_axis(grid, region)
    if fa is None:
        raise ConfigurationError(f"region {region.label} is not a boundary face of positive measure")
    axis, side = fa
    w = np.ones(1)
    idx = np.zeros(1, dtype=np.int64)
    for b in range(grid.dim):
        if b == axis:
            wb = np.ones(1)
            ib = np.array([side])
        else:
            lo, hi = region.box[b]
            wb = hat_integrals(grid, b, lo, hi)
            ib = np.arange(grid.cells[b] + 1)
        w = np.outer(wb, w).ravel()
        idx = (ib[:, None] * grid._strides[b] + idx[None, :]).ravel()
    keep = w > 0
    return idx[keep], w[keep]


def validate_region(grid: StructuredGrid, region: BoundaryRegion) -> np.ndarray:
    """Check the region invariants and return its node selection."""
    nodes = select_boundary_nodes(grid, region)
    if not region.lumped and not region_is_face(grid, region):
        raise ConfigurationError(
            f"region {region.label} does not cover a boundary face with positive measure; "
            "set lumped=True for point or line selections")
    return nodes
