import numpy as np
import pytest

from wavekin import ConfigurationError, build_rect_grid, build_tri_mesh


def test_unit_interval_bisection():
    g = build_rect_grid(0.0, 1.0, 2)
    assert np.array_equal(g.edges, [0.0, 0.5, 1.0])
    assert np.array_equal(g.centers, [0.25, 0.75])


def test_momentum_axis_cell_width():
    # 75 cells over (10, 25) gives width 0.2 each.
    g = build_rect_grid(10.0, 25.0, 75)
    assert g.n == 75
    assert np.allclose(g.widths, 0.2)
    assert g.edges[0] == 10.0 and g.edges[-1] == 25.0


def test_single_cell_grid():
    g = build_rect_grid(0.0, 1.0, 1)
    assert g.centers.tolist() == [0.5]
    assert g.widths.tolist() == [1.0]


def test_grid_width_self_consistency():
    g = build_rect_grid(-2.0, 7.0, 13)
    assert np.array_equal(g.widths, np.diff(g.edges))
    # forward differences of the edge array divided by widths are exactly 1
    assert np.all((g.edges[1:] - g.edges[:-1]) / g.widths == 1.0)


@pytest.mark.parametrize("lo,hi,n", [(1.0, 1.0, 4), (2.0, 1.0, 4), (0.0, 1.0, 0), (0.0, 1.0, -3)])
def test_grid_rejects_bad_bounds(lo, hi, n):
    with pytest.raises(ConfigurationError):
        build_rect_grid(lo, hi, n)


def test_index_of_clips_to_valid_cells():
    g = build_rect_grid(0.0, 1.0, 4)
    assert g.index_of(0.1) == 0
    assert g.index_of(0.99) == 3
    assert g.index_of(-5.0) == 0
    assert g.index_of(5.0) == 3


def test_single_rect_splits_into_two_triangles():
    mesh = build_tri_mesh(build_rect_grid(0.0, 1.0, 1), build_rect_grid(0.0, 1.0, 1))
    assert mesh.triangles.shape == (2, 3)
    shared = set(mesh.triangles[0]) & set(mesh.triangles[1])
    assert len(shared) == 2  # the diagonal
    assert 1 in mesh.neighbor_lists[0]
    assert 0 in mesh.neighbor_lists[1]


def test_triangle_count_matches_cell_count():
    mesh = build_tri_mesh(build_rect_grid(-1.0, 1.0, 20), build_rect_grid(0.0, 1.0, 20))
    assert mesh.triangles.shape[0] == 800


def test_triangle_areas_tile_the_rectangle():
    mesh = build_tri_mesh(build_rect_grid(-1.0, 1.0, 3), build_rect_grid(0.0, 1.0, 5))
    assert mesh.areas.sum() == pytest.approx(2.0, rel=1e-14)
    assert np.all(mesh.areas > 0.0)


def test_locate_agrees_with_barycentric_membership(rng):
    mesh = build_tri_mesh(build_rect_grid(-1.0, 1.0, 7), build_rect_grid(0.0, 2.0, 5))
    pts = np.column_stack([
        rng.uniform(-1.0, 1.0, 200),
        rng.uniform(0.0, 2.0, 200),
    ])
    tris = mesh.locate(pts)
    verts = mesh.vertices[mesh.triangles[tris]]
    # barycentric coordinates of each point in its reported triangle
    a, b, c = verts[:, 0], verts[:, 1], verts[:, 2]
    det = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (c[:, 0] - a[:, 0]) * (b[:, 1] - a[:, 1])
    l1 = ((b[:, 0] - pts[:, 0]) * (c[:, 1] - pts[:, 1])
          - (c[:, 0] - pts[:, 0]) * (b[:, 1] - pts[:, 1])) / det
    l2 = ((c[:, 0] - pts[:, 0]) * (a[:, 1] - pts[:, 1])
          - (a[:, 0] - pts[:, 0]) * (c[:, 1] - pts[:, 1])) / det
    l3 = 1.0 - l1 - l2
    eps = 1e-12
    assert np.all(l1 >= -eps) and np.all(l2 >= -eps) and np.all(l3 >= -eps)


def test_gradients_exact_for_affine_fields(rng):
    mesh = build_tri_mesh(build_rect_grid(-1.0, 1.0, 4), build_rect_grid(0.0, 1.0, 6))
    a, b, c = 1.7, -0.3, 0.25
    vals = a * mesh.vertices[:, 0] + b * mesh.vertices[:, 1] + c
    grads = mesh.gradients(vals)
    assert np.allclose(grads[:, 0], a, atol=1e-13)
    assert np.allclose(grads[:, 1], b, atol=1e-13)


def test_neighbor_pairs_share_reported_vertices():
    mesh = build_tri_mesh(build_rect_grid(0.0, 1.0, 3), build_rect_grid(0.0, 1.0, 3))
    pairs, shared = mesh.neighbor_pairs
    assert pairs.shape[0] == shared.shape[0]
    for (ta, tb), sv in zip(pairs, shared):
        va, vb = set(mesh.triangles[ta]), set(mesh.triangles[tb])
        common = va & vb
        listed = set(int(s) for s in sv if s >= 0)
        assert listed == common
        assert 1 <= len(common) <= 2


def test_kr_boundary_mask_marks_only_extreme_columns():
    mesh = build_tri_mesh(build_rect_grid(-1.0, 1.0, 4), build_rect_grid(0.0, 1.0, 3))
    mask = mesh.kr_boundary_vertex_mask
    on = np.isclose(np.abs(mesh.vertices[:, 0]), 1.0)
    assert np.array_equal(mask, on)
