import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pftopo.errors import ConfigurationError
from pftopo.mesh import (BoundaryRegion, build_grid, element_basis, element_nodes, face_weights,
                         nodal_measure, select_boundary_nodes, validate_region)


@pytest.mark.parametrize("extents, cells, nodes, elements", [
    ((2, 1), (400, 200), 80601, 80000),
    ((1, 1), (1, 1), 4, 1),
    ((2, 1, 1), (4, 2, 2), 45, 16),
])
def test_grid_counts(extents, cells, nodes, elements):
    g = build_grid(extents, cells)
    assert g.node_count == nodes
    assert g.element_count == elements


@pytest.mark.parametrize("extents, cells", [((0, 1), (2, 2)), ((1, -1), (2, 2)), ((1, 1), (0, 2)),
                                            ((1,), (1,)), ((1, 1, 1, 1), (1, 1, 1, 1))])
def test_bad_grid_rejected(extents, cells):
    with pytest.raises(ConfigurationError):
        build_grid(extents, cells)


def test_element_nodes_order():
    assert tuple(element_nodes(build_grid((1, 1), (1, 1)), 0)) == (0, 1, 3, 2)
    assert tuple(element_nodes(build_grid((2, 1), (2, 1)), 1)) == (1, 2, 5, 4)
    assert sorted(element_nodes(build_grid((1, 1, 1), (1, 1, 1)), 0)) == list(range(8))
    with pytest.raises(IndexError):
        element_nodes(build_grid((1, 1), (1, 1)), 1)


def test_nodal_measure_examples():
    np.testing.assert_allclose(nodal_measure(build_grid((1, 1), (1, 1))), 0.25)
    w = nodal_measure(build_grid((2, 1), (2, 1)))
    np.testing.assert_allclose(w, [0.25, 0.5, 0.25, 0.25, 0.5, 0.25])


grids = st.builds(
    lambda d, ext, cells: (tuple(ext[:d]), tuple(cells[:d])),
    st.sampled_from([2, 3]),
    st.lists(st.floats(0.1, 10.0), min_size=3, max_size=3),
    st.lists(st.integers(1, 7), min_size=3, max_size=3),
)


@settings(max_examples=60, deadline=None)
@given(grids)
def test_grid_invariants(spec):
    extents, cells = spec
    g = build_grid(extents, cells)
    np.testing.assert_allclose(g.spacing, np.array(extents) / np.array(cells))
    assert g.node_count == np.prod(np.array(cells) + 1)
    w = nodal_measure(g)
    assert np.all(w > 0)
    assert abs(w.sum() - np.prod(extents)) <= 1e-12 * np.prod(extents)
    # interior weight is the cell volume
    interior = ~g.boundary_mask
    np.testing.assert_allclose(w[interior], np.prod(g.spacing))
    # lexicographic indexing is a bijection, x fastest
    idx = np.arange(g.node_count)
    assert np.array_equal(g.node_index(g.node_multi_index(idx)), idx)
    # element nodes lie within one spacing of each other
    x = g.coordinates[g.connectivity]
    span = x.max(axis=1) - x.min(axis=1)
    assert np.all(span <= g.spacing * (1 + 1e-12))


def test_coordinates_reproducible_from_index():
    g = build_grid((2, 1), (4, 2))
    np.testing.assert_allclose(g.coordinates[7], [1.0, 0.5])
    assert g.node_index(np.array([[3, 1]]))[0] == 8


def test_element_basis_partition_of_unity():
    for g in (build_grid((2, 1), (3, 2)), build_grid((1, 2, 3), (1, 2, 2))):
        N, dN, w = element_basis(g)
        np.testing.assert_allclose(N.sum(axis=1), 1.0)
        np.testing.assert_allclose(dN.sum(axis=1), 0.0, atol=1e-14)
        assert abs(w.sum() - np.prod(g.spacing)) < 1e-14


def test_case1_traction_nodes():
    g = build_grid((2, 1), (400, 200))
    r = BoundaryRegion("traction", ((2, 2), (0.45, 0.55)), traction=(0, -1))
    assert select_boundary_nodes(g, r).size == 21


def test_unit_square_left_edge():
    g = build_grid((1, 1), (1, 1))
    r = BoundaryRegion("dirichlet_zero", ((0, 0), (0, 1)))
    assert list(select_boundary_nodes(g, r)) == [0, 2]


def test_bridge_support_nodes():
    g = build_grid((2, 1), (400, 200))
    r = BoundaryRegion("dirichlet_zero", ((0, 0.05), (0, 0)))
    assert select_boundary_nodes(g, r).size == 11


def test_empty_selection_names_region():
    g = build_grid((2, 1), (4, 2))
    r = BoundaryRegion("dirichlet_zero", ((0.6, 0.7), (0.4, 0.6)), name="floating")
    with pytest.raises(ConfigurationError, match="floating"):
        select_boundary_nodes(g, r)


def test_selection_idempotent_and_disjoint():
    g = build_grid((2, 1), (40, 20))
    a = BoundaryRegion("dirichlet_zero", ((0, 0.5), (0, 0)))
    b = BoundaryRegion("dirichlet_zero", ((1.0, 2.0), (0, 0)))
    sa = select_boundary_nodes(g, a)
    assert np.array_equal(sa, select_boundary_nodes(g, a))
    assert not set(sa) & set(select_boundary_nodes(g, b))


def test_degenerate_region_needs_lumped_flag():
    g = build_grid((2, 1), (4, 2))
    point = ((2, 2), (0, 0))
    with pytest.raises(ConfigurationError):
        validate_region(g, BoundaryRegion("traction", point, traction=(0, -1)))
    assert validate_region(g, BoundaryRegion("traction", point, traction=(0, -1), lumped=True)).size == 1


def test_face_weights_length():
    # weights integrate the face length exactly, also for boxes off the node lines
    g = build_grid((2, 1), (20, 10))
    for lo, hi in [(0.45, 0.55), (0.43, 0.58), (0.0, 1.0)]:
        _, w = face_weights(g, BoundaryRegion("traction", ((2, 2), (lo, hi)), traction=(0, -1)))
        assert w.sum() == pytest.approx(hi - lo, rel=1e-13)
    g3 = build_grid((2, 1, 1), (4, 4, 2))
    _, w = face_weights(g3, BoundaryRegion("traction", ((2, 2), (0, 0.1), (0, 1)), traction=(0, -1, 0)))
    assert w.sum() == pytest.approx(0.1, rel=1e-13)


def test_face_weights_match_trapezoid_on_node_aligned_box():
    g = build_grid((2, 1), (4, 4))
    nodes, w = face_weights(g, BoundaryRegion("traction", ((2, 2), (0.25, 0.75)), traction=(0, -1)))
    np.testing.assert_allclose(g.coordinates[nodes, 1], [0.25, 0.5, 0.75])
    np.testing.assert_allclose(w, [0.125, 0.25, 0.125])
