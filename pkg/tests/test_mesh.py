import math

import numpy as np
import pytest

from homocut.mesh import (MeshError, MetricSpec, build_mesh, load_mesh,
                          load_off, save_mesh)
from homocut import geometries as geo


def test_unit_square_two_triangles():
    mesh = build_mesh([[0, 0], [1, 0], [1, 1], [0, 1]],
                      [[0, 1, 2], [0, 2, 3]])
    assert mesh.n_vertices == 4
    assert mesh.n_edges == 5
    assert mesh.n_simplices(2) == 2
    assert mesh.total_volume() == pytest.approx(1.0)
    assert mesh.boundary_faces.sum() == 4


def test_single_segment():
    mesh = build_mesh([[0.0], [1.0]], [[0, 1]])
    assert mesh.dimension == 1
    assert mesh.total_volume() == pytest.approx(1.0)
    assert sorted(mesh.boundary_vertices().tolist()) == [0, 1]
    # vertex duals are half-edge lengths
    assert np.allclose(mesh.hodge_star(0), [0.5, 0.5])


def test_grid_torus_counts():
    mesh = geo.flat_torus_mesh(8)
    assert mesh.n_vertices == 64
    assert mesh.n_edges == 192
    assert mesh.n_simplices(2) == 128
    # Euler characteristic of the torus vanishes
    assert mesh.n_vertices - mesh.n_edges + mesh.n_simplices(2) == 0
    assert mesh.total_volume() == pytest.approx(1.0, abs=1e-12)
    assert not mesh.has_boundary()


def test_non_manifold_rejected():
    # three triangles sharing one edge
    with pytest.raises(MeshError, match="non-manifold"):
        build_mesh([[0, 0], [1, 0], [0.5, 1], [0.5, -1], [2, 0.5]],
                   [[0, 1, 2], [0, 1, 3], [0, 1, 4]])


def test_inconsistent_orientation_rejected():
    with pytest.raises(MeshError, match="orientation"):
        build_mesh([[0, 0], [1, 0], [1, 1], [0, 1]],
                   [[0, 1, 2], [0, 3, 2]])


def test_moebius_strip_rejected():
    # classic 5-vertex Moebius band cannot be coherently oriented
    cells = [[0, 1, 2], [1, 2, 3], [2, 3, 4], [3, 4, 0], [4, 0, 1]]
    coords = [[math.cos(2 * math.pi * k / 5), math.sin(2 * math.pi * k / 5)]
              for k in range(5)]
    lengths = {}
    for c in cells:
        for i in range(3):
            for j in range(i + 1, 3):
                lengths[tuple(sorted((c[i], c[j])))] = 1.0
    with pytest.raises(MeshError, match="orientation"):
        build_mesh(coords, cells, MetricSpec(edge_lengths=lengths))


def test_degenerate_metric_rejected():
    lengths = {(0, 1): 1.0, (1, 2): 1.0, (0, 2): 3.0}
    with pytest.raises(MeshError, match="degenerate|inequal"):
        build_mesh([[0, 0], [1, 0], [0, 1]], [[0, 1, 2]],
                   MetricSpec(edge_lengths=lengths))


def test_duplicate_vertex_rejected():
    with pytest.raises(MeshError, match="degenerate"):
        build_mesh([[0, 0], [1, 0], [0, 1]], [[0, 1, 1]])


def test_hodge_star_positive_and_equilateral():
    mesh = build_mesh([[0, 0], [1, 0], [0.5, math.sqrt(3) / 2],
                       [1.5, math.sqrt(3) / 2]],
                      [[0, 1, 2], [1, 3, 2]])
    for k in range(3):
        star = mesh.hodge_star(k)
        assert np.all(star > 0)


def test_hodge_star_torus_vertex_entries(torus8):
    star0 = torus8.hodge_star(0)
    assert np.allclose(star0, 1.0 / 64)
    assert torus8.dual_volumes[0].sum() == pytest.approx(1.0)


def test_hodge_star_degree_out_of_range(torus4):
    with pytest.raises(ValueError):
        torus4.hodge_star(3)


def test_partition_of_unity():
    for mesh in (geo.flat_torus_mesh(4),
                 geo.hyperbolic_cylinder_mesh(-1, 1, 4, 6),
                 geo.flat_disk_mesh(3, 8),
                 geo.solid_torus_mesh(4, 4)):
        assert mesh.dual_volumes[0].sum() == pytest.approx(
            mesh.total_volume(), rel=1e-10)


def test_hodge_star_permutation_equivariance(disk_small):
    mesh = disk_small
    rng = np.random.default_rng(0)
    perm = rng.permutation(mesh.n_vertices)
    cells = []
    for s, o in zip(mesh.simplices[2], mesh.orientations):
        cell = [int(perm[v]) for v in s]
        if o < 0:
            cell[0], cell[1] = cell[1], cell[0]
        cells.append(cell)
    lengths = {}
    for ei, (v, w) in enumerate(mesh.simplices[1]):
        key = tuple(sorted((int(perm[v]), int(perm[w]))))
        lengths[key] = mesh.edge_lengths[ei]
    coords = np.empty_like(mesh.vertices)
    coords[perm] = mesh.vertices
    other = build_mesh(coords, cells, MetricSpec(edge_lengths=lengths))
    for k in (0, 1, 2):
        star_a = mesh.hodge_star(k)
        star_b = other.hodge_star(k)
        for i, s in enumerate(mesh.simplices[k]):
            image = tuple(sorted(int(perm[v]) for v in s))
            j = other.simplex_index[k][image]
            assert star_b[j] == pytest.approx(star_a[i], rel=1e-12)


def test_disk_boundary_curvature_and_refinement():
    coarse = geo.flat_disk_mesh(4, 16)
    vals, _, verdict = coarse.boundary_mean_curvature()
    assert verdict
    assert np.allclose(vals, 1.0, rtol=0.05)
    err_coarse = np.abs(vals - 1.0).max()
    fine = geo.flat_disk_mesh(8, 32)
    vals_f, _, _ = fine.boundary_mean_curvature()
    err_fine = np.abs(vals_f - 1.0).max()
    # refinement at least halves the boundary-curvature error
    assert err_fine <= 0.6 * err_coarse


def test_cylinder_curvature_detector():
    sym = geo.hyperbolic_cylinder_mesh(-1, 1, 48, 16)
    vals, _, verdict = sym.boundary_mean_curvature()
    assert verdict
    assert np.allclose(vals, math.tanh(1.0), rtol=0.05)

    flat_end = geo.hyperbolic_cylinder_mesh(0, 2, 48, 16)
    vals2, hinges2, verdict2 = flat_end.boundary_mean_curvature()
    assert not verdict2
    # hinge values near x = 0 are close to tanh(0) = 0
    xs = flat_end.vertices[hinges2][:, 0]
    assert np.abs(vals2[xs < 0.5]).max() < 0.05
    assert vals2[xs > 1.5].min() > 0.9


def test_curvature_closed_mesh_vacuous(torus4):
    with pytest.warns(UserWarning):
        vals, hinges, verdict = torus4.boundary_mean_curvature()
    assert verdict
    assert vals.size == 0


def test_mesh_file_roundtrip(tmp_path):
    mesh = geo.hyperbolic_cylinder_mesh(-1, 1, 4, 6)
    path = tmp_path / "mesh.txt"
    save_mesh(mesh, path)
    loaded = load_mesh(path)
    assert loaded.n_vertices == mesh.n_vertices
    assert loaded.n_edges == mesh.n_edges
    assert np.allclose(loaded.edge_lengths, mesh.edge_lengths)
    assert loaded.total_volume() == pytest.approx(mesh.total_volume())


def test_off_import(tmp_path):
    off = tmp_path / "tri.off"
    off.write_text("OFF\n4 2 5\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n"
                   "3 0 1 2\n3 0 2 3\n")
    mesh = load_off(off)
    assert mesh.n_vertices == 4
    assert mesh.total_volume() == pytest.approx(1.0)
    sidecar = tmp_path / "tri.metric"
    lines = []
    for ei, (v, w) in enumerate(mesh.simplices[1]):
        lines.append(f"{v} {w} {2 * mesh.edge_lengths[ei]}")
    sidecar.write_text("\n".join(lines) + "\n")
    scaled = load_off(off, sidecar)
    assert scaled.total_volume() == pytest.approx(4.0)


def test_analytic_metric_sampling():
    spec = MetricSpec(metric_fn=lambda x: np.diag([1.0, math.cosh(x[0]) ** 2]))
    mesh = build_mesh([[0, 0], [0, 0.1], [0.1, 0.05]],
                      [[0, 1, 2]], spec)
    ei = mesh.simplex_index[1][(0, 1)]
    assert mesh.edge_lengths[ei] == pytest.approx(0.1 * math.cosh(0.0))
