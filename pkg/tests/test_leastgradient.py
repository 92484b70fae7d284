import math

import numpy as np
import pytest

import homocut.leastgradient as lg
import homocut.mesh as hmesh
from homocut import geometries as geo


def torus_problem(n, a, b, norm=None):
    mesh = geo.flat_torus_mesh(n)
    ex, ey = geo.torus_cocycles(mesh, n)
    return lg.LeastGradientProblem(mesh, eta=a * ex + b * ey, norm=norm)


def disk_problem(n_r, n_t, weight=1.0):
    mesh = geo.flat_disk_mesh(n_r, n_t)
    p, q = geo.disk_boundary_antipodes(mesh, n_r, n_t)
    f, crossing = lg.boundary_data_from_cycle(mesh, {p: weight, q: -weight})
    return lg.LeastGradientProblem(mesh, boundary_values=f,
                                   crossing_cochain=crossing), (p, q)


def perturbed_torus(n, seed, scale=0.1):
    mesh = geo.flat_torus_mesh(n)
    rng = np.random.default_rng(seed)
    lengths = {}
    for ei, (v, w) in enumerate(mesh.simplices[1]):
        lengths[(v, w)] = mesh.edge_lengths[ei] * (1 + scale * rng.uniform(-1, 1))
    cells = [tuple(s) if o > 0 else (s[1], s[0], s[2])
             for s, o in zip(mesh.simplices[2], mesh.orientations)]
    return hmesh.build_mesh(mesh.vertices, cells,
                            hmesh.MetricSpec(edge_lengths=lengths))


# -- energies ---------------------------------------------------------------


def test_p_energy_constant_form():
    prob = torus_problem(8, 1, 0)
    u = np.zeros(prob.mesh.n_vertices)
    # crossing cocycles are not the harmonic representative, but at u
    # realizing the constant form the energy is the area
    sol = lg.solve_p_laplacian(prob, 2.0, 1e-8)[0]
    assert lg.p_energy(prob, sol, 2.0) == pytest.approx(1.0, abs=1e-9)
    assert lg.p_energy(prob, sol, 1.5) == pytest.approx(1.0, abs=1e-9)


def test_p_energy_gauge_invariance():
    prob = torus_problem(4, 1, 2)
    u = np.random.default_rng(0).standard_normal(prob.mesh.n_vertices)
    for p in (1.3, 2.0):
        a = lg.p_energy(prob, u, p)
        b = lg.p_energy(prob, u + 3.7, p)
        assert a == pytest.approx(b, rel=1e-12)


def test_p_energy_out_of_range():
    prob = torus_problem(4, 1, 0)
    u = np.zeros(prob.mesh.n_vertices)
    with pytest.raises(ValueError):
        lg.p_energy(prob, u, 2.5)


def test_quadratic_energy_against_dense_assembly():
    # independent oracle: assemble the p=2 quadratic form with plain loops
    prob = torus_problem(4, 1, -1)
    mesh = prob.mesh
    rng = np.random.default_rng(2)
    u = rng.standard_normal(mesh.n_vertices)
    omega = prob.eta.copy()
    for ei, (v, w) in enumerate(mesh.simplices[1]):
        omega[ei] += u[w] - u[v]
    total = 0.0
    for t, cell in enumerate(mesh.simplices[2]):
        G = mesh.cell_gram(t)
        wvec = []
        for i in (1, 2):
            v, w = cell[0], cell[i]
            a, b = sorted((v, w))
            val = omega[mesh.simplex_index[1][(a, b)]]
            wvec.append(val if v == a else -val)
        wvec = np.array(wvec)
        total += float(wvec @ np.linalg.solve(G, wvec)) \
            * mesh.cell_volumes[2][t]
    assert lg.p_energy(prob, u, 2.0) == pytest.approx(total, rel=1e-12)


# -- p-Laplacian stage solver ------------------------------------------------


def test_torus_constant_form_is_stationary():
    # with the harmonic representative the solve returns zero correction
    n = 6
    mesh = geo.flat_torus_mesh(n)
    ex, ey = geo.torus_cocycles(mesh, n)
    prob = lg.LeastGradientProblem(mesh, eta=ex)
    u15, info = lg.solve_p_laplacian(prob, 1.5, 1e-3)
    c = prob.cell_components(prob.omega(u15))
    norms = np.linalg.norm(c, axis=1)
    assert np.allclose(norms, 1.0, atol=1e-8)
    assert info["converged"]


def test_p2_matches_direct_solve():
    # independent dense assembly and direct solve of the quadratic problem
    prob, _ = disk_problem(4, 12)
    mesh = prob.mesh
    n = mesh.n_vertices
    K = np.zeros((n, n))
    rhs = np.zeros(n)
    for t, cell in enumerate(mesh.simplices[2]):
        G = mesh.cell_gram(t)
        Ginv = np.linalg.inv(G)
        vol = mesh.cell_volumes[2][t]
        P = np.zeros((2, 3))
        P[:, 0] = -1
        P[0, 1] = 1
        P[1, 2] = 1
        eta_vec = []
        for i in (1, 2):
            v, w = cell[0], cell[i]
            a, b = sorted((v, w))
            val = prob.eta[mesh.simplex_index[1][(a, b)]]
            eta_vec.append(val if v == a else -val)
        local = P.T @ Ginv @ P * vol
        for i in range(3):
            for j in range(3):
                K[cell[i], cell[j]] += local[i, j]
            rhs[cell[i]] += (P.T @ Ginv @ np.array(eta_vec))[i] * vol
    free = prob.free
    pin = np.flatnonzero(prob.dirichlet)
    f = prob.boundary_values
    sys_rhs = -rhs[free] - K[np.ix_(free, pin)] @ f[pin]
    u_free = np.linalg.solve(K[np.ix_(free, free)], sys_rhs)
    u_direct = f.copy()
    u_direct[free] = u_free
    u_newton, info = lg.solve_p_laplacian(prob, 2.0, 1e-9, tol=1e-13)
    assert np.abs(u_newton - u_direct).max() < 1e-10


def test_disk_p2_flux_pairing():
    prob, (p, q) = disk_problem(4, 12)
    mesh = prob.mesh
    u, _ = lg.solve_p_laplacian(prob, 2.0, 1e-9)
    omega = prob.omega(u)
    # total cut crossing along an interior path joining the interiors of
    # the two boundary arcs telescopes to the prescribed unit jump
    path = [40, 28, 16, 4, 0, 10, 22, 34, 46]   # theta = pi/2 to 3*pi/2
    total = 0.0
    for a, b in zip(path, path[1:]):
        v, w = sorted((a, b))
        ei = mesh.simplex_index[1][(v, w)]
        total += omega[ei] if a == v else -omega[ei]
    assert abs(abs(total) - 1.0) < 1e-9


def test_singular_system_raises():
    # interior disconnected from the boundary data is impossible here, so
    # emulate an unsolvable stage through a bogus eps
    prob = torus_problem(4, 1, 0)
    with pytest.raises(ValueError):
        lg.solve_p_laplacian(prob, 2.0, 0.0)


# -- conjugate form and duality ----------------------------------------------


def test_conjugate_form_constant():
    n = 6
    mesh = geo.flat_torus_mesh(n)
    ex, _ = geo.torus_cocycles(mesh, n)
    prob = lg.LeastGradientProblem(mesh, eta=ex)
    u, _ = lg.solve_p_laplacian(prob, 1.5, 1e-6)
    gamma = lg.conjugate_form(prob, u, 1.5, 1e-6)
    norms = np.linalg.norm(gamma, axis=1)
    assert np.allclose(norms, 1.0, atol=1e-6)
    # p = 2, eps -> 0: the conjugate form is the gradient itself
    gamma2 = lg.conjugate_form(prob, u, 2.0, 0.0)
    c = prob.cell_components(prob.omega(u))
    assert np.allclose(gamma2, c)
    assert lg.divergence_residual(prob, u, 1.5, 1e-6) < 1e-9


def test_duality_gap_rational_and_p2():
    sol = lg.continuation(torus_problem(8, 1, 0))
    audit = lg.duality_gap(sol)
    assert audit["relative_gap"] <= 1e-3
    assert audit["calibration_sup"] <= 1.01
    assert audit["divergence_residual"] <= 1e-8
    # a single quadratic stage is not yet calibrated: positive gap
    prob, _ = disk_problem(6, 16)
    sol2 = lg.continuation(prob, schedule=[(2.0, 1e-6)])
    gap2 = lg.duality_gap(sol2)["relative_gap"]
    assert gap2 > 1e-3
    sol3 = lg.continuation(prob)
    assert lg.duality_gap(sol3)["relative_gap"] < gap2


def test_weak_duality_random_competitors():
    sol = lg.continuation(torus_problem(6, 2, 1))
    prob = sol.problem
    rng = np.random.default_rng(7)
    sup = sol.gamma_sup
    for _ in range(50):
        u = rng.standard_normal(prob.mesh.n_vertices)
        omega = prob.omega(u)
        comp = prob.cell_components(omega)
        pair = float(np.einsum("ti,ti->t", comp, sol.gamma) @ prob.volumes)
        assert pair <= prob.mass(omega) * sup + 1e-9


# -- continuation ------------------------------------------------------------


def test_continuation_torus_rational():
    sol = lg.continuation(torus_problem(8, 1, 0))
    assert sol.mass == pytest.approx(1.0, abs=1e-3)
    assert sol.converged
    masses = [t["mass"] for t in sol.trace]
    assert all(b <= a + 1e-6 for a, b in zip(masses, masses[1:]))


def test_continuation_golden_ratio():
    phi = 1.6180339887
    sol = lg.continuation(torus_problem(16, 1, phi))
    assert sol.mass == pytest.approx(math.hypot(1, phi), rel=0.02)
    cut = lg.extract_cut(sol)
    assert cut.support_fraction > 0.5


def test_single_stage_schedule():
    sol = lg.continuation(torus_problem(4, 1, 0), schedule=[(2.0, 1e-6)])
    assert len(sol.trace) == 1
    assert sol.mass == pytest.approx(1.0, abs=1e-9)


def test_schedule_must_decrease():
    with pytest.raises(ValueError):
        lg.continuation(torus_problem(4, 1, 0),
                        schedule=[(1.5, 1e-3), (2.0, 1e-4)])


def test_empty_schedule():
    with pytest.raises(ValueError):
        lg.continuation(torus_problem(4, 1, 0), schedule=[])


# -- cut extraction ----------------------------------------------------------


def test_extract_cut_mass_consistency():
    sol = lg.continuation(torus_problem(8, 1, 1))
    cut = lg.extract_cut(sol)
    assert cut.mass == sol.mass
    # the per-edge crystalline estimate brackets the mass from above here
    assert cut.dual_mass_estimate >= cut.mass - 1e-9


def test_extract_cut_zero_class():
    mesh = geo.flat_torus_mesh(4)
    prob = lg.LeastGradientProblem(mesh)
    sol = lg.continuation(prob, schedule=[(2.0, 1e-6)])
    cut = lg.extract_cut(sol)
    assert sol.mass == pytest.approx(0.0, abs=1e-12)
    assert np.abs(cut.weights).max() == pytest.approx(0.0, abs=1e-12)


def test_extract_cut_pairing_reproduces_class():
    n = 8
    mesh = geo.flat_torus_mesh(n)
    ex, ey = geo.torus_cocycles(mesh, n)
    prob = lg.LeastGradientProblem(mesh, eta=2 * ex - ey)
    sol = lg.continuation(prob)
    cut = lg.extract_cut(sol)
    lx, ly = geo.torus_cycles(mesh, n)
    assert cut.pairing(lx) == pytest.approx(2.0, abs=1e-9)
    assert cut.pairing(ly) == pytest.approx(-1.0, abs=1e-9)


def test_disk_diameter_cut():
    prob, _ = disk_problem(12, 48)
    sol = lg.continuation(prob)
    assert sol.mass == pytest.approx(2.0, rel=0.02)
    cut = lg.extract_cut(sol)
    assert cut.boundary_trace_error() < 1e-12
    assert not sol.warnings  # endpoint contact is not adhesion


def test_homogeneity_of_boundary_data():
    mesh = geo.flat_disk_mesh(3, 8)
    p, q = geo.disk_boundary_antipodes(mesh, 3, 8)
    f1, _ = lg.boundary_data_from_cycle(mesh, {p: 1.0, q: -1.0})
    f2, _ = lg.boundary_data_from_cycle(mesh, {p: 2.0, q: -2.0})
    jumps1 = sorted(set(round(v, 9) for v in f1.values()))
    jumps2 = sorted(set(round(v, 9) for v in f2.values()))
    assert jumps1 == [0.0, 1.0]
    assert jumps2 == [0.0, 2.0]


def test_boundary_data_incompatible_cycle():
    mesh = geo.flat_disk_mesh(3, 8)
    p, _ = geo.disk_boundary_antipodes(mesh, 3, 8)
    with pytest.raises(lg.SolverError, match="incompatible"):
        lg.boundary_data_from_cycle(mesh, {p: 1.0})


def test_boundary_data_zero_cycle():
    mesh = geo.hyperbolic_cylinder_mesh(-1, 1, 4, 6)
    f, crossing = lg.boundary_data_from_cycle(mesh, {})
    assert all(v == 0 for v in f.values())
    assert all(v == 0 for v in crossing.values())


def test_boundary_data_absorbs_winding():
    # arc-class data: the winding cocycle's holonomy around each boundary
    # loop must be balanced by the cycle weights on that loop
    n_x, n_t = 4, 6
    mesh = geo.hyperbolic_cylinder_mesh(-1, 1, n_x, n_t)
    wind, _ = geo.cylinder_cocycles(mesh, n_x, n_t)
    weights = {}
    hols = []
    for loop in mesh.boundary_loops():
        hol = 0.0
        for a, b in zip(loop, loop[1:] + loop[:1]):
            v, w = sorted((a, b))
            ei = mesh.simplex_index[1][(v, w)]
            hol += wind[ei] if a == v else -wind[ei]
        hols.append(hol)
        weights[loop[0]] = hol
    # both circles wind once, with opposite induced orientations
    assert sorted(hols) == [-1.0, 1.0]
    f, crossing = lg.boundary_data_from_cycle(mesh, weights, eta=wind)
    assert len(f) == 2 * n_t
    # imbalanced weights are rejected
    bad = dict(weights)
    first = next(iter(bad))
    bad[first] += 1.0
    with pytest.raises(lg.SolverError, match="incompatible"):
        lg.boundary_data_from_cycle(mesh, bad, eta=wind)


# -- invariance properties ---------------------------------------------------


def test_change_of_representative():
    n = 6
    mesh = geo.flat_torus_mesh(n)
    ex, ey = geo.torus_cocycles(mesh, n)
    rng = np.random.default_rng(5)
    g = rng.standard_normal(mesh.n_vertices)
    eta = ex + 0.5 * ey
    eta_shift = eta.copy()
    for ei, (v, w) in enumerate(mesh.simplices[1]):
        eta_shift[ei] += g[w] - g[v]
    sol_a = lg.continuation(lg.LeastGradientProblem(mesh, eta=eta))
    sol_b = lg.continuation(lg.LeastGradientProblem(mesh, eta=eta_shift))
    assert sol_a.mass == pytest.approx(sol_b.mass, abs=1e-9)
    gap_a = lg.duality_gap(sol_a)["relative_gap"]
    gap_b = lg.duality_gap(sol_b)["relative_gap"]
    assert gap_a == pytest.approx(gap_b, abs=1e-9)


def test_scaling_of_mass():
    lam = 2.5
    base = perturbed_torus(3, seed=4)
    lengths = {}
    for ei, (v, w) in enumerate(base.simplices[1]):
        lengths[(v, w)] = lam * base.edge_lengths[ei]
    cells = [tuple(s) if o > 0 else (s[1], s[0], s[2])
             for s, o in zip(base.simplices[2], base.orientations)]
    scaled = hmesh.build_mesh(base.vertices, cells,
                              hmesh.MetricSpec(edge_lengths=lengths))
    ex, ey = geo.torus_cocycles(base, 3)
    sol_a = lg.continuation(lg.LeastGradientProblem(base, eta=ex))
    sol_b = lg.continuation(lg.LeastGradientProblem(scaled, eta=ex))
    assert sol_b.mass == pytest.approx(lam * sol_a.mass, rel=1e-6)


def test_gradient_against_central_differences():
    rng = np.random.default_rng(11)
    prob = torus_problem(4, 1.3, -0.4)
    for p in (1.1, 1.5, 2.0):
        x = rng.standard_normal(len(prob.free)) * 0.4
        _, grad, _ = lg._energy_grad_hess(prob, x, p, 0.05, want_hess=False)
        h = 1e-6
        for i in rng.choice(len(x), size=5, replace=False):
            xp = x.copy()
            xp[i] += h
            xm = x.copy()
            xm[i] -= h
            fd = (lg._energy_value(prob, xp, p, 0.05)
                  - lg._energy_value(prob, xm, p, 0.05)) / (2 * h)
            assert abs(fd - grad[i]) <= 1e-6 * max(1.0, abs(fd))


# -- integrand validation ----------------------------------------------------


def test_validate_integrand_riemannian_and_l1():
    assert lg.validate_integrand(lg.RiemannianNorm(), 200)["passed"]
    assert lg.validate_integrand(lg.ComponentL1Norm(), 200)["passed"]


def test_validate_integrand_rejects_quadratic():
    class Quadratic(lg.EllipticIntegrand):
        def value(self, c):
            return np.einsum("...i,...i->...", c, c)

    report = lg.validate_integrand(Quadratic(), 100)
    assert not report["passed"]
    kinds = [f[0] for f in report["failures"]]
    assert "homogeneity" in kinds


def test_validate_integrand_guard():
    with pytest.raises(ValueError):
        lg.validate_integrand(lg.RiemannianNorm(), 0)


def test_l1_norm_solver_matches_oracle():
    # crystalline integrand through the full pipeline, cross-checked
    # against the path-independent small-problem oracle
    prob = torus_problem(4, 1, 0, norm=lg.ComponentL1Norm())
    sol = lg.continuation(prob, lg.default_schedule(p_end=1.0005,
                                                    eps_end=1e-9, stages=20))
    oracle = lg.exact_small_oracle(prob, restarts=1, restart_iter=60000)
    assert abs(sol.mass - oracle["value"]) <= 5e-4
    # the crystalline mass exceeds the metric mass of the same class
    assert sol.mass >= 1.0 - 1e-9


# -- exact small oracle -------------------------------------------------------


def test_small_oracle_torus_unit():
    mesh = geo.flat_torus_mesh(3)
    ex, _ = geo.torus_cocycles(mesh, 3)
    prob = lg.LeastGradientProblem(mesh, eta=ex)
    out = lg.exact_small_oracle(prob, max_iter=40000, restart_iter=30000,
                                restarts=1)
    assert out["value"] == pytest.approx(1.0, abs=1e-6)


def test_small_oracle_zero_problem():
    mesh = geo.flat_torus_mesh(3)
    prob = lg.LeastGradientProblem(mesh)
    out = lg.exact_small_oracle(prob, max_iter=2000, restarts=0)
    assert out["value"] == pytest.approx(0.0, abs=1e-9)


def test_small_oracle_matches_continuation_on_disk():
    mesh = geo.flat_disk_mesh(2, 8)
    p, q = geo.disk_boundary_antipodes(mesh, 2, 8)
    f, crossing = lg.boundary_data_from_cycle(mesh, {p: 1.0, q: -1.0})
    prob = lg.LeastGradientProblem(mesh, boundary_values=f,
                                   crossing_cochain=crossing)
    oracle = lg.exact_small_oracle(prob, restarts=1, restart_iter=60000)
    sol = lg.continuation(prob, lg.default_schedule(p_end=1.0005,
                                                    eps_end=1e-9, stages=20))
    assert abs(oracle["value"] - sol.mass) <= 1e-4


def test_small_oracle_size_guard():
    prob = torus_problem(8, 1, 0)
    with pytest.raises(lg.SolverError, match="guard"):
        lg.exact_small_oracle(prob)


def test_eta_must_be_closed():
    mesh = geo.flat_torus_mesh(4)
    eta = np.zeros(mesh.n_edges)
    eta[0] = 1.0
    with pytest.raises(lg.SolverError, match="closed"):
        lg.LeastGradientProblem(mesh, eta=eta)
