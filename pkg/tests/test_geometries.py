import math

import numpy as np
import pytest

from homocut import geometries as geo
from conftest import pairing


def circle_length(mesh, row, n_x, n_t):
    total = 0.0
    for j in range(n_t):
        a = (j % n_t) + n_t * row
        b = ((j + 1) % n_t) + n_t * row
        v, w = sorted((a, b))
        total += mesh.edge_lengths[mesh.simplex_index[1][(v, w)]]
    return total


def test_torus_counts_small():
    mesh = geo.flat_torus_mesh(3)
    assert (mesh.n_vertices, mesh.n_edges, mesh.n_simplices(2)) == (9, 27, 18)
    assert mesh.n_vertices - mesh.n_edges + mesh.n_simplices(2) == 0
    assert not mesh.has_boundary()


def test_torus_too_small_rejected():
    with pytest.raises(ValueError):
        geo.flat_torus_mesh(2)


def test_torus_area_exact():
    assert geo.flat_torus_mesh(8).total_volume() == pytest.approx(1.0,
                                                                  abs=1e-12)


def test_hyperbolic_circle_lengths():
    n_x, n_t = 8, 16
    mesh = geo.hyperbolic_cylinder_mesh(-1, 1, n_x, n_t)
    # metric sampling at midpoints makes every discrete circle exact
    assert circle_length(mesh, 0, n_x, n_t) == pytest.approx(
        2 * math.pi * math.cosh(1.0), rel=1e-12)
    assert circle_length(mesh, n_x // 2, n_x, n_t) == pytest.approx(
        2 * math.pi, rel=1e-12)
    assert circle_length(mesh, n_x, n_x, n_t) == pytest.approx(
        2 * math.pi * math.cosh(1.0), rel=1e-12)


def test_hyperbolic_invalid_ranges():
    with pytest.raises(ValueError):
        geo.hyperbolic_cylinder_mesh(1.0, -1.0, 8, 8)
    with pytest.raises(ValueError):
        geo.hyperbolic_cylinder_mesh(-1.0, 1.0, 2, 8)


def test_curvature_refinement_halves_error():
    exact = math.tanh(1.0)
    errs = []
    for n_x in (8, 16):
        mesh = geo.hyperbolic_cylinder_mesh(-1, 1, n_x, 12)
        vals, _, _ = mesh.boundary_mean_curvature()
        errs.append(np.abs(vals - exact).max())
    assert errs[1] <= 0.6 * errs[0]


def test_cocycle_pairings_torus():
    n = 6
    mesh = geo.flat_torus_mesh(n)
    lx, ly = geo.torus_cycles(mesh, n)
    ex, ey = geo.torus_cocycles(mesh, n)
    assert pairing(ex, lx) == 1 and pairing(ex, ly) == 0
    assert pairing(ey, lx) == 0 and pairing(ey, ly) == 1
    for eta in (ex, ey):
        assert np.abs(mesh.coboundary(1) @ eta).max() == 0


def test_cocycle_pairings_cylinder():
    n_x, n_t = 5, 7
    mesh = geo.hyperbolic_cylinder_mesh(-1, 1, n_x, n_t)
    core, arc = geo.cylinder_cycles(mesh, n_x, n_t)
    wind, step = geo.cylinder_cocycles(mesh, n_x, n_t)
    assert pairing(wind, core) == 1 and pairing(wind, arc) == 0
    assert pairing(step, core) == 0 and pairing(step, arc) == 1
    # the step cocycle vanishes on boundary edges (a relative cocycle)
    assert np.abs(step[mesh.is_boundary_simplex(1)]).max() == 0


def test_oracle_values():
    torus = geo.GeometrySpec("flat_torus", n=8)
    assert geo.oracle_values(torus, (1, 0))["min_mass"] == pytest.approx(1.0)
    assert geo.oracle_values(torus, (3, 4))["min_mass"] == pytest.approx(5.0)
    hyp = geo.GeometrySpec("hyperbolic_cylinder", x_min=-1, x_max=1)
    o = geo.oracle_values(hyp, 1)
    assert o["min_mass"] == pytest.approx(2 * math.pi)
    assert o["attained"]
    off = geo.oracle_values(
        geo.GeometrySpec("hyperbolic_cylinder", x_min=0.0, x_max=2.0), 1)
    assert off["min_mass"] == pytest.approx(2 * math.pi)
    assert not off["attained"]
    disk = geo.GeometrySpec("flat_disk", n_r=4, n_t=16, radius=1.0)
    assert geo.oracle_values(disk, 1)["min_mass"] == pytest.approx(2.0)


def test_stable_norm_trivial_and_units():
    assert geo.stable_norm(8, (0, 0))["mass"] == 0.0
    out = geo.stable_norm(8, (1, 0))
    assert out["mass"] == pytest.approx(1.0, abs=1e-3)
    assert out["pairing"] == pytest.approx(out["mass"], rel=2e-3)


def test_stable_norm_homogeneity_and_symmetry():
    one = geo.stable_norm(8, (1, 2))["mass"]
    two = geo.stable_norm(8, (2, 4))["mass"]
    assert two == pytest.approx(2 * one, rel=2e-3)
    swapped = geo.stable_norm(8, (2, 1))["mass"]
    assert swapped == pytest.approx(one, rel=2e-3)


def test_geodesic_oracle_basics():
    length, x0 = geo.cosh_geodesic(1.0, math.pi)
    assert 0 < x0 < 1
    # independent sanity bounds: longer than the chart chord in the flat
    # metric at the dip, shorter than the boundary path
    assert length > 2 * (1 - x0)
    assert length < math.pi * math.cosh(1.0)
    # sweep is monotone: wider separation dips deeper
    _, x0_wide = geo.cosh_geodesic(1.0, 0.75 * math.pi)
    assert x0_wide > 0
    l2, x0_narrow = geo.cosh_geodesic(1.0, 0.5 * math.pi)
    assert x0_narrow > x0
    assert l2 < length


def test_samplers_report_area():
    assert geo.FlatTorusSampler().area() == pytest.approx(1.0)
    assert geo.FlatCylinderSampler(2.0, 3.0).area() == pytest.approx(6.0)
    hyp = geo.HyperbolicCylinderSampler(-1, 1)
    assert hyp.area() == pytest.approx(2 * math.pi * 2 * math.sinh(1.0))


def test_hyperbolic_sampler_distance():
    hyp = geo.HyperbolicCylinderSampler(-1, 1)
    # pure x displacement has unit speed
    assert hyp.distance((0.0, 1.0), (0.5, 1.0)) == pytest.approx(0.5)
    # theta displacement at the core costs cosh(0) = 1 per radian
    assert hyp.distance((0.0, 0.0), (0.0, 0.25)) == pytest.approx(
        0.25, rel=1e-6)
