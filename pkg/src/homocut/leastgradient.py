"""Homology-constrained least-gradient minimization.

The total 1-cochain splits as omega = eta + du with eta a fixed closed
cochain carrying the multivalued (class) part and u a vertex potential with
prescribed boundary values.  Per top cell the cochain is reconstructed as a
constant gradient (piecewise-linear interpolation), so the p-energy is

    J_p(u) = sum_cells  phi(grad)^p  * volume,

minimized by damped Newton per continuation stage while (p, eps) slide from
the quadratic problem toward the mass functional.  The conjugate form of
the final stage is the calibration certifying the minimal cut.
"""

import math

import numpy as np
import scipy.sparse as sparse
import scipy.sparse.linalg as spla


class SolverError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# cell norms (elliptic integrands)


class EllipticIntegrand:
    """Fiberwise norm on reconstructed gradients, in orthonormal cell frames.

    Subclasses provide the exact value and the smoothed value/derivatives
    used by the Newton solver.  ``c`` has shape (n_cells, d).
    """

    name = "abstract"

    def value(self, c):
        raise NotImplementedError

    def smooth_value(self, c, eps):
        raise NotImplementedError

    def smooth_grad(self, c, eps):
        raise NotImplementedError

    def smooth_hess(self, c, eps):
        raise NotImplementedError

    def dual_norm(self, g):
        """Dual norm of covectors (for the calibration sup bound)."""
        raise NotImplementedError


class RiemannianNorm(EllipticIntegrand):
    """The metric norm |c|_2; dual norm is again |.|_2."""

    name = "riemannian"

    def value(self, c):
        return np.linalg.norm(c, axis=-1)

    def smooth_value(self, c, eps):
        return np.sqrt(np.einsum("...i,...i->...", c, c) + eps * eps)

    def smooth_grad(self, c, eps):
        psi = self.smooth_value(c, eps)
        return c / psi[..., None]

    def smooth_hess(self, c, eps):
        psi = self.smooth_value(c, eps)
        d = c.shape[-1]
        eye = np.eye(d)
        outer = c[..., :, None] * c[..., None, :]
        return eye / psi[..., None, None] - outer / (psi ** 3)[..., None, None]

    def dual_norm(self, g):
        return np.linalg.norm(g, axis=-1)


class ComponentL1Norm(EllipticIntegrand):
    """Crystalline integrand: the l1 norm of the frame components.

    Frame-dependent by construction; useful as a genuinely anisotropic
    test integrand.  Dual norm is the max norm.
    """

    name = "l1"

    def value(self, c):
        return np.abs(c).sum(axis=-1)

    def smooth_value(self, c, eps):
        return np.sqrt(c * c + eps * eps).sum(axis=-1)

    def smooth_grad(self, c, eps):
        return c / np.sqrt(c * c + eps * eps)

    def smooth_hess(self, c, eps):
        r = np.sqrt(c * c + eps * eps)
        diag = eps * eps / (r ** 3)
        d = c.shape[-1]
        out = np.zeros(c.shape + (d,))
        idx = np.arange(d)
        out[..., idx, idx] = diag
        return out

    def dual_norm(self, g):
        return np.abs(g).max(axis=-1)


NORMS = {"riemannian": RiemannianNorm, "l1": ComponentL1Norm}


def validate_integrand(phi, n_samples, dim=2, seed=0):
    """Randomized audit of the norm axioms: positivity + definiteness,
    absolute homogeneity, subadditivity.  Returns a report with witnesses
    for every failed axiom."""
    if n_samples < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(seed)
    failures = []
    a = rng.standard_normal((n_samples, dim)) * 10 ** rng.uniform(-2, 2, (n_samples, 1))
    b = rng.standard_normal((n_samples, dim)) * 10 ** rng.uniform(-2, 2, (n_samples, 1))
    ts = rng.standard_normal(n_samples) * 10 ** rng.uniform(-2, 2, n_samples)
    va, vb = np.atleast_1d(phi.value(a)), np.atleast_1d(phi.value(b))
    if np.any(va < 0):
        i = int(np.argmin(va))
        failures.append(("positivity", a[i].tolist(), float(va[i])))
    if np.any(va[np.linalg.norm(a, axis=1) > 1e-8] <= 0):
        mask = np.linalg.norm(a, axis=1) > 1e-8
        i = int(np.flatnonzero(mask & (va <= 0))[0])
        failures.append(("definiteness", a[i].tolist(), float(va[i])))
    zero = np.atleast_1d(phi.value(np.zeros((1, dim))))[0]
    if zero != 0:
        failures.append(("definiteness", [0.0] * dim, float(zero)))
    vt = np.atleast_1d(phi.value(a * ts[:, None]))
    bad = np.abs(vt - np.abs(ts) * va) > 1e-9 * (1 + np.abs(vt))
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        failures.append(("homogeneity", {"t": float(ts[i]), "a": a[i].tolist(),
                                         "phi(ta)": float(vt[i]),
                                         "|t|phi(a)": float(abs(ts[i]) * va[i])}))
    vab = np.atleast_1d(phi.value(a + b))
    bad = vab > va + vb + 1e-12 * (1 + vab)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        failures.append(("subadditivity", {"a": a[i].tolist(), "b": b[i].tolist()}))
    return {"passed": not failures, "failures": failures, "samples": n_samples}


# ---------------------------------------------------------------------------
# problem setup


class LeastGradientProblem:
    """Mesh + closed representative cochain eta + Dirichlet boundary data.

    ``eta`` is an array over edges (zeros allowed), ``boundary_values`` a
    map vertex-id -> value for every boundary vertex (defaults to zero).
    The class/cycle bookkeeping objects are optional and are carried along
    for reporting; ``crossing_cochain`` is the edge cochain on the boundary
    that the cut's boundary trace must reproduce.
    """

    def __init__(self, mesh, eta=None, boundary_values=None, norm=None,
                 alpha=None, cycle=None, crossing_cochain=None):
        self.mesh = mesh
        d = mesh.dimension
        if d < 1:
            raise SolverError("need a mesh of dimension >= 1")
        ne = mesh.n_edges
        self.eta = np.zeros(ne) if eta is None else np.asarray(eta, dtype=float)
        if self.eta.shape != (ne,):
            raise SolverError("eta must be an edge cochain")
        closed = mesh.coboundary(1) @ self.eta if d >= 2 else np.zeros(0)
        scale = max(1.0, np.abs(self.eta).max() if ne else 1.0)
        if closed.size and np.abs(closed).max() > 1e-10 * scale:
            raise SolverError("eta is not closed")
        self.norm = norm if norm is not None else RiemannianNorm()
        self.alpha = alpha
        self.cycle = cycle

        bverts = mesh.boundary_vertices()
        self.boundary_vertex_ids = bverts
        f = np.zeros(mesh.n_vertices)
        if boundary_values is not None:
            if isinstance(boundary_values, dict):
                for v, val in boundary_values.items():
                    f[int(v)] = float(val)
            else:
                f[bverts] = np.asarray(boundary_values, dtype=float)
        self.boundary_values = f
        if len(bverts):
            self.dirichlet = np.zeros(mesh.n_vertices, dtype=bool)
            self.dirichlet[bverts] = True
        else:
            # closed manifold: pin one vertex to fix the gauge
            self.dirichlet = np.zeros(mesh.n_vertices, dtype=bool)
            self.dirichlet[0] = True
        self.free = np.flatnonzero(~self.dirichlet)
        self._free_pos = -np.ones(mesh.n_vertices, dtype=np.int64)
        self._free_pos[self.free] = np.arange(len(self.free))
        if crossing_cochain is not None:
            self.crossing_cochain = dict(crossing_cochain)
        else:
            self.crossing_cochain = self._derived_crossing()
        self._build_cells()

    def _derived_crossing(self):
        mesh = self.mesh
        if not mesh.has_boundary() or mesh.dimension < 2:
            return {}
        out = {}
        for fi in np.flatnonzero(mesh.is_boundary_simplex(1)):
            v, w = mesh.simplices[1][fi]
            out[int(fi)] = (self.boundary_values[w] - self.boundary_values[v]
                            + self.eta[fi])
        return out

    def _build_cells(self):
        mesh = self.mesh
        d = mesh.dimension
        cells = np.asarray(mesh.simplices[d], dtype=np.int64)
        n_t = len(cells)
        self.cells = cells
        self.volumes = mesh.cell_volumes[d].copy()
        self._edges = np.asarray(mesh.simplices[1], dtype=np.int64)
        edge_idx = np.empty((n_t, d), dtype=np.int64)
        edge_sign = np.empty((n_t, d))
        for t, s in enumerate(mesh.simplices[d]):
            for i in range(d):
                v, w = s[0], s[i + 1]
                a, b = (v, w) if v < w else (w, v)
                edge_idx[t, i] = mesh.simplex_index[1][(a, b)]
                edge_sign[t, i] = 1.0 if v == a else -1.0
        self.edge_idx = edge_idx
        self.edge_sign = edge_sign
        minv = np.empty((n_t, d, d))
        for t in range(n_t):
            G = mesh.cell_gram(t)
            try:
                L = np.linalg.cholesky(G)
            except np.linalg.LinAlgError:
                raise SolverError(f"degenerate cell {t}")
            minv[t] = np.linalg.inv(L)
        self.frame = minv  # c = frame @ w gives orthonormal components

    # -- cochain algebra -------------------------------------------------

    def omega(self, u):
        """Total edge cochain eta + du for a full vertex potential."""
        return self.eta + u[self._edges[:, 1]] - u[self._edges[:, 0]]

    def full_potential(self, u_free):
        u = self.boundary_values.copy()
        u[self.free] = u_free
        return u

    def cell_components(self, omega):
        """Per-cell orthonormal gradient components from an edge cochain."""
        w = self.edge_sign * omega[self.edge_idx]
        return np.einsum("tij,tj->ti", self.frame, w)

    def cell_norms(self, omega):
        return self.norm.value(self.cell_components(omega))

    def mass(self, omega):
        return float(self.cell_norms(omega) @ self.volumes)


def p_energy(problem, u, p, eps=0.0):
    """The continuation functional sum phi(grad)^p * vol at potential u.

    ``u`` is the full vertex array (boundary values included); p in (1, 2]
    except that the exact mass (p = 1, eps = 0) is also allowed.
    """
    if not (1.0 <= p <= 2.0):
        raise ValueError("p must lie in [1, 2]")
    c = problem.cell_components(problem.omega(u))
    psi = problem.norm.smooth_value(c, eps) if eps > 0 else problem.norm.value(c)
    return float((psi ** p) @ problem.volumes)


def _energy_grad_hess(problem, u_free, p, eps, want_hess=True):
    """Value, gradient and (optionally) Hessian on the free vertices."""
    u = problem.full_potential(u_free)
    omega = problem.omega(u)
    c = problem.cell_components(omega)
    norm = problem.norm
    vol = problem.volumes
    psi = norm.smooth_value(c, eps)
    val = float((psi ** p) @ vol)

    dpsi = norm.smooth_grad(c, eps)
    fac = p * psi ** (p - 1) * vol
    gc = fac[:, None] * dpsi                       # dJ/dc per cell
    gw = np.einsum("ti,tij->tj", gc, problem.frame)
    # scatter into vertices: w_i = omega(t0 -> ti) depends on u_{ti} - u_{t0}
    n = problem.mesh.n_vertices
    grad_full = np.zeros(n)
    np.add.at(grad_full, problem.cells[:, 1:], gw)
    np.add.at(grad_full, problem.cells[:, 0], -gw.sum(axis=1))
    grad = grad_full[problem.free]
    if not want_hess:
        return val, grad, None

    d2psi = norm.smooth_hess(c, eps)
    a = (p * (p - 1) * psi ** (p - 2) * vol)
    hc = a[:, None, None] * dpsi[:, :, None] * dpsi[:, None, :] \
        + fac[:, None, None] * d2psi
    hw = np.einsum("tij,tik,tkl->tjl", problem.frame, hc, problem.frame)
    d = problem.mesh.dimension
    # vertex blocks: P maps cell potentials (u_{t0..td}) to path values w
    hcell = np.empty((len(vol), d + 1, d + 1))
    hcell[:, 1:, 1:] = hw
    s = hw.sum(axis=2)
    hcell[:, 1:, 0] = -s
    hcell[:, 0, 1:] = -hw.sum(axis=1)
    hcell[:, 0, 0] = hw.sum(axis=(1, 2))
    rows = np.repeat(problem.cells, d + 1, axis=1).ravel()
    cols = np.tile(problem.cells, (1, d + 1)).ravel()
    H = sparse.csr_matrix((hcell.ravel(), (rows, cols)),
                          shape=(n, n))
    Hff = H[np.ix_(problem.free, problem.free)].tocsc()
    return val, grad, Hff


def solve_p_laplacian(problem, p, eps, warm_start=None, tol=1e-9,
                      max_iter=60):
    """Newton with Armijo line search on the smoothed p-energy.

    Returns ``(u_full, info)``; ``info['converged']`` is False when the
    iteration cap is reached, in which case the best iterate is returned.
    Dirichlet data is baked into the free/pinned vertex split.
    """
    if not (1.0 < p <= 2.0):
        raise ValueError("p must lie in (1, 2]")
    if eps <= 0:
        raise ValueError("eps must be positive")
    if warm_start is None:
        x = np.zeros(len(problem.free))
    else:
        x = np.asarray(warm_start, dtype=float)[problem.free].copy()
    val, grad, H = _energy_grad_hess(problem, x, p, eps)
    scale = max(1.0, abs(val))
    lam = 0.0
    iters = 0
    converged = False
    for iters in range(1, max_iter + 1):
        gnorm = np.abs(grad).max() if grad.size else 0.0
        if gnorm <= tol * scale:
            converged = True
            break
        try:
            if lam > 0:
                Hreg = H + lam * sparse.identity(H.shape[0], format="csc")
            else:
                Hreg = H
            step = spla.spsolve(Hreg, -grad)
        except Exception as exc:  # singular factorization
            raise SolverError(f"linear solve failed: {exc}") from exc
        if not np.all(np.isfinite(step)):
            raise SolverError("singular system (disconnected interior?)")
        # Armijo backtracking
        slope = float(grad @ step)
        if slope >= 0:
            lam = max(lam * 10, 1e-8 * scale)
            continue
        t = 1.0
        accepted = False
        for _ in range(40):
            xt = x + t * step
            vt = _energy_value(problem, xt, p, eps)
            if vt <= val + 1e-4 * t * slope:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            lam = max(lam * 10, 1e-8 * scale)
            continue
        x = x + t * step
        lam *= 0.25
        val, grad, H = _energy_grad_hess(problem, x, p, eps)
    info = {
        "converged": converged,
        "iterations": iters,
        "residual": float(np.abs(grad).max() if grad.size else 0.0),
        "energy": val,
    }
    return problem.full_potential(x), info


def _energy_value(problem, u_free, p, eps):
    u = problem.full_potential(u_free)
    c = problem.cell_components(problem.omega(u))
    psi = problem.norm.smooth_value(c, eps)
    return float((psi ** p) @ problem.volumes)


def conjugate_form(problem, u, p, eps):
    """Per-cell calibration covector: psi^(p-1) * dpsi at the gradient.

    Returned in each cell's orthonormal frame; its dual norm tends to one
    on the support of the cut as p -> 1, and the pairing with the gradient
    recovers the smoothed p-energy.  Exact stationarity of u makes the
    weak divergence (the energy gradient over p) vanish identically.
    """
    c = problem.cell_components(problem.omega(u))
    psi = problem.norm.smooth_value(c, eps)
    gamma = (psi ** (p - 1))[:, None] * problem.norm.smooth_grad(c, eps)
    return gamma


def divergence_residual(problem, u, p, eps):
    """Max weak-divergence residual of the conjugate form at u."""
    x = u[problem.free]
    _, grad, _ = _energy_grad_hess(problem, x, p, eps, want_hess=False)
    return float(np.abs(grad).max() / p if grad.size else 0.0)


def default_schedule(p_end=1.002, eps_start=1e-1, eps_end=1e-7, stages=16):
    """Geometric continuation from the quadratic problem toward p -> 1."""
    if stages < 1:
        raise ValueError("schedule is empty")
    ps = 1.0 + np.geomspace(1.0, p_end - 1.0, stages)
    eps = np.geomspace(eps_start, eps_end, stages)
    return list(zip(ps.tolist(), eps.tolist()))


class LeastGradientSolution:
    """Converged continuation output: potential, cochain, calibration, trace.

    ``warnings`` carries the semantic diagnoses (boundary adhesion);
    ``notes`` the numerical ones (stage iteration caps, mass monotonicity).
    """

    def __init__(self, problem, u, trace, warnings, notes, converged):
        self.problem = problem
        self.u = u
        self.omega = problem.omega(u)
        self.trace = trace
        self.warnings = list(warnings)
        self.notes = list(notes)
        self.converged = converged
        p, eps = trace[-1]["p"], trace[-1]["eps"]
        self.p_final, self.eps_final = p, eps
        self.gamma = conjugate_form(problem, u, p, eps)
        self.gamma_sup = float(problem.norm.dual_norm(self.gamma).max())
        self.cell_norms = problem.cell_norms(self.omega)
        self.mass = float(self.cell_norms @ problem.volumes)
        self.divergence = divergence_residual(problem, u, p, eps)

    def gamma_profile(self):
        """(|gamma|_dual, cell centroid coordinates) per cell, for reports."""
        sup = self.problem.norm.dual_norm(self.gamma)
        coords = self.problem.mesh.vertices[self.problem.cells].mean(axis=1)
        return sup, coords


def continuation(problem, schedule=None, tol=1e-9, max_iter=60,
                 adhesion_threshold=0.01, mass_slack=1e-6):
    """Warm-started p-Laplacian continuation along a (p, eps) schedule.

    The schedule must be non-increasing in p toward 1 and in eps toward 0;
    per-stage diagnostics are recorded and a violation of the expected mass
    monotonicity (beyond slack) is flagged rather than fatal.
    """
    if schedule is None:
        schedule = default_schedule()
    if len(schedule) == 0:
        raise ValueError("schedule is empty")
    ps = [s[0] for s in schedule]
    if any(b > a for a, b in zip(ps, ps[1:])) and not all(
            b <= a + 1e-15 for a, b in zip(ps, ps[1:])):
        raise ValueError("schedule must be non-increasing in p")
    notes = []
    trace = []
    u = None
    failed = False
    for stage, (p, eps) in enumerate(schedule):
        try:
            u, info = solve_p_laplacian(problem, p, eps, warm_start=u,
                                        tol=tol, max_iter=max_iter)
        except SolverError:
            if u is None:
                raise
            notes.append(f"stage {stage} (p={p:.6g}) failed; "
                         "returning last iterate")
            failed = True
            break
        mass_p = problem.mass(problem.omega(u))
        trace.append({
            "stage": stage, "p": p, "eps": eps,
            "energy": info["energy"], "mass": mass_p,
            "residual": info["residual"], "iterations": info["iterations"],
            "converged": info["converged"],
        })
        if not info["converged"]:
            notes.append(f"stage {stage} (p={p:.6g}) hit the iteration cap "
                         f"(residual {info['residual']:.2e})")
    masses = [t["mass"] for t in trace]
    slack = mass_slack * max(1.0, max(masses, default=1.0))
    for a, b in zip(masses, masses[1:]):
        if b > a + slack:
            notes.append("mass increased along the continuation "
                         f"({a:.8g} -> {b:.8g})")
            break
    converged = (not failed) and bool(trace) and trace[-1]["converged"]
    sol = LeastGradientSolution(problem, u, trace, [], notes, converged)
    _check_boundary_adhesion(sol, adhesion_threshold)
    return sol


def _check_boundary_adhesion(sol, threshold):
    """Flag cut mass running along the boundary.

    Contact forced by the prescribed boundary cycle does not count: cells
    near boundary edges that carry a nonzero crossing are where the cut is
    required to end, so they are excluded from the adhesion measure.
    """
    mesh = sol.problem.mesh
    if not mesh.has_boundary() or sol.mass <= 1e-12:
        return
    bvert = mesh.is_boundary_simplex(0).copy()
    scale = max((abs(v) for v in sol.problem.crossing_cochain.values()),
                default=0.0)
    if scale > 0:
        allowed = np.zeros(mesh.n_vertices, dtype=bool)
        for fi, w in sol.problem.crossing_cochain.items():
            if abs(w) > 1e-8 * scale:
                for v in mesh.simplices[1][fi]:
                    allowed[v] = True
        # one further ring of slack around the prescribed endpoints
        grown = allowed.copy()
        for v, w in mesh.simplices[1]:
            if allowed[v] or allowed[w]:
                grown[v] = grown[w] = True
        bvert &= ~grown
    touching = bvert[sol.problem.cells].any(axis=1)
    frac = float((sol.cell_norms[touching] @ sol.problem.volumes[touching])
                 / sol.mass)
    sol.boundary_mass_fraction = frac
    if frac > threshold:
        sol.warnings.append(
            f"boundary adhesion: {frac:.1%} of the cut mass sits in the "
            "cell layer touching the boundary")


# ---------------------------------------------------------------------------
# cut current


class CutCurrent:
    """Signed crossing measure per interior dual (d-1)-cell.

    The dual cell of edge e is crossed with measure omega_e; the mass uses
    the same piecewise-linear quadrature as the solver, so it agrees with
    the solution mass identically.  The per-edge estimate
    sum |w| * dual volume is reported alongside; it overestimates oblique
    cuts (it is a crystalline quadrature) and agrees for mesh-aligned ones.
    """

    def __init__(self, solution, support_threshold=1e-3):
        problem = solution.problem
        mesh = problem.mesh
        interior = ~mesh.is_boundary_simplex(1)
        self.edge_ids = np.flatnonzero(interior)
        self.weights = solution.omega[self.edge_ids]
        self.dual_volumes = mesh.dual_volumes[1][self.edge_ids]
        self.mass = solution.mass
        self.dual_mass_estimate = float(
            np.abs(self.weights) @ self.dual_volumes)
        wmax = np.abs(self.weights).max() if len(self.weights) else 0.0
        if wmax > 0:
            self.support_fraction = float(
                (np.abs(self.weights) > support_threshold * wmax).mean())
        else:
            self.support_fraction = 0.0
        self.solution = solution

    def boundary_trace_error(self):
        """Max deviation of the cut's boundary trace from the input cycle."""
        problem = self.solution.problem
        mesh = problem.mesh
        err = 0.0
        for fi, target in problem.crossing_cochain.items():
            err = max(err, abs(self.solution.omega[fi] - target))
        return err

    def pairing(self, cycle_chain):
        """Crossing pairing with a 1-cycle (parent-indexed chain)."""
        return float(sum(self.solution.omega[ei] * float(w)
                         for ei, w in cycle_chain.items()))


def extract_cut(solution, support_threshold=1e-3):
    return CutCurrent(solution, support_threshold)


def duality_gap(solution):
    """Audit of the max-flow/min-cut identity at the discrete level.

    The calibration is rescaled to dual sup-norm one; the gap is the mass
    minus its pairing with the gradient, nonnegative up to roundoff, and
    the relative gap vanishes exactly when the calibration certifies the
    cut.  Also reports the sup norm before rescaling and the divergence
    residual.
    """
    problem = solution.problem
    c = problem.cell_components(solution.omega)
    pair = float(np.einsum("ti,ti->t", c, solution.gamma) @ problem.volumes)
    sup = solution.gamma_sup
    pair_norm = pair / sup if sup > 0 else 0.0
    gap = solution.mass - pair_norm
    rel = gap / solution.mass if solution.mass > 1e-300 else 0.0
    return {
        "mass": solution.mass,
        "pairing": pair,
        "pairing_normalized": pair_norm,
        "gap": gap,
        "relative_gap": rel,
        "calibration_sup": sup,
        "divergence_residual": solution.divergence,
    }


# ---------------------------------------------------------------------------
# boundary data from a prescribed boundary cycle


def boundary_data_from_cycle(mesh, cycle_weights, eta=None, crossing=None):
    """Dirichlet data integrating a boundary (d-2)-cycle.

    For d=2 the cycle is a map boundary-vertex -> weight; walking each
    boundary loop in its induced orientation, the data jumps by the weight
    when leaving a weighted vertex, after subtracting the holonomy of eta
    along the loop.  A nonzero net (weight - holonomy) around some loop
    means the cycle is incompatible with the class data and raises.

    For d >= 3 supply ``crossing``: the edge cochain on the boundary whose
    coboundary structure encodes the cycle; the data solves
    delta(f) = crossing - restriction of eta exactly (least squares with
    residual check).
    """
    d = mesh.dimension
    if eta is None:
        eta = np.zeros(mesh.n_edges)
    if d == 2:
        f = {}
        crossing_out = {}
        for loop in mesh.boundary_loops():
            val = 0.0
            f[loop[0]] = 0.0
            for a, b in zip(loop, loop[1:] + loop[:1]):
                v, w = (a, b) if a < b else (b, a)
                ei = mesh.simplex_index[1][(v, w)]
                sign = 1.0 if a == v else -1.0
                jump = float(cycle_weights.get(a, 0.0))
                # data jumps by the weight on leaving a weighted vertex;
                # eta's holonomy along the loop is absorbed so that the
                # boundary trace eta + df reproduces exactly the jumps
                val += jump - sign * eta[ei]
                crossing_out[ei] = sign * jump
                if b != loop[0]:
                    f[b] = val
            residue = val - f[loop[0]]
            if abs(residue) > 1e-9 * (1 + abs(val)):
                raise SolverError(
                    f"boundary cycle incompatible with the class data: net "
                    f"weight {residue:.3e} around a boundary loop")
        return f, crossing_out
    if crossing is None:
        raise SolverError("d >= 3 needs an explicit crossing cochain for the cycle")
    # solve delta f = crossing - iota*eta on the boundary 1-skeleton
    bedges = np.flatnonzero(mesh.is_boundary_simplex(1))
    bverts = mesh.boundary_vertices()
    pos = {int(v): i for i, v in enumerate(bverts)}
    rows, cols, vals, rhs = [], [], [], []
    for r, fi in enumerate(bedges):
        v, w = mesh.simplices[1][fi]
        rows.extend([r, r])
        cols.extend([pos[v], pos[w]])
        vals.extend([-1.0, 1.0])
        rhs.append(float(crossing.get(int(fi), 0.0)) - eta[fi])
    A = sparse.csr_matrix((vals, (rows, cols)), shape=(len(bedges), len(bverts)))
    rhs = np.asarray(rhs)
    sol = spla.lsqr(A, rhs, atol=1e-14, btol=1e-14, iter_lim=10000)[0]
    resid = A @ sol - rhs
    if np.abs(resid).max() > 1e-8 * (1 + np.abs(rhs).max()):
        raise SolverError("boundary cycle incompatible with the class data "
                          f"(residual {np.abs(resid).max():.3e})")
    f = {int(v): float(sol[pos[int(v)]]) for v in bverts}
    crossing_out = {int(fi): float(crossing.get(int(fi), 0.0)) for fi in bedges}
    return f, crossing_out


# ---------------------------------------------------------------------------
# exact small-problem oracle


def exact_small_oracle(problem, max_edges=60, seed=0, max_iter=150000,
                       restarts=2, restart_iter=100000, window=None,
                       tol=1e-8):
    """Reference minimum of the mass functional on a tiny problem.

    Plain subgradient descent with diminishing (stall-halved) steps on the
    nonsmooth objective, independent of the continuation path.  Runs a base
    pass plus seeded random restarts and returns the best value; the spread
    across runs is reported so callers can assert reproducibility.
    """
    ne = problem.mesh.n_edges
    if ne > max_edges:
        raise SolverError(f"oracle size guard: {ne} edges > {max_edges}")
    rng = np.random.default_rng(seed)
    nf = len(problem.free)
    if window is None:
        window = max(400, 40 * nf)

    def objective(x):
        u = problem.full_potential(x)
        return problem.mass(problem.omega(u))

    def subgrad(x):
        u = problem.full_potential(x)
        c = problem.cell_components(problem.omega(u))
        psi = problem.norm.value(c)
        g_c = np.zeros_like(c)
        mask = psi > 1e-14
        # norm subgradient: exact gradient away from the kink, zero at it
        g_c[mask] = problem.norm.smooth_grad(c[mask], 0.0)
        gc = g_c * problem.volumes[:, None]
        gw = np.einsum("ti,tij->tj", gc, problem.frame)
        n = problem.mesh.n_vertices
        grad_full = np.zeros(n)
        np.add.at(grad_full, problem.cells[:, 1:], gw)
        np.add.at(grad_full, problem.cells[:, 0], -gw.sum(axis=1))
        return grad_full[problem.free]

    def run(x0, iters):
        x = x0.copy()
        best_x, best = x.copy(), objective(x)
        step = 0.5 * (1.0 + abs(best))
        since_improve = 0
        for k in range(iters):
            g = subgrad(x)
            gn = np.linalg.norm(g)
            if gn < 1e-15:
                break
            x = x - (step / gn) * g
            val = objective(x)
            if val < best - tol * (1 + abs(best)):
                best, best_x = val, x.copy()
                since_improve = 0
            else:
                since_improve += 1
            if since_improve >= window:
                step *= 0.5
                x = best_x.copy()
                since_improve = 0
                if step < 1e-14 * (1 + abs(best)):
                    break
        return best, best_x

    if nf == 0:
        val = objective(np.zeros(0))
        return {"value": val, "spread": 0.0, "runs": 1}
    results = []
    best, _ = run(np.zeros(nf), max_iter)
    results.append(best)
    scale = 1.0 + abs(best)
    for _ in range(restarts):
        x0 = rng.standard_normal(nf) * scale
        val, _ = run(x0, restart_iter)
        results.append(val)
    value = min(results)
    return {"value": value, "spread": max(results) - value, "runs": results}
