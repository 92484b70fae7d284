"""Analytic test geometries: mesh generators, certified cycle/cocycle data,
closed-form minimal-cut oracles and point samplers for packing graphs.

All generators produce structured grid meshes so that oracle values and
convergence rates are reproducible.
"""

import math

import numpy as np
from scipy.integrate import quad

from .mesh import MetricSpec, build_mesh


# ---------------------------------------------------------------------------
# flat torus


def flat_torus_mesh(n):
    """Unit square torus, n x n grid, each square split into two triangles.

    n = 2 is rejected: the wrapped diagonals identify distinct cells on the
    same vertex set, which a simplicial complex cannot represent.
    """
    if n < 3:
        raise ValueError("flat torus mesh needs n >= 3 (smaller grids "
                         "identify distinct simplices on one vertex set)")
    h = 1.0 / n

    def vid(i, j):
        return (i % n) + n * (j % n)

    verts = np.array([[(k % n) * h, (k // n) * h] for k in range(n * n)])
    cells = []
    for j in range(n):
        for i in range(n):
            v00, v10 = vid(i, j), vid(i + 1, j)
            v01, v11 = vid(i, j + 1), vid(i + 1, j + 1)
            cells.append((v00, v10, v11))
            cells.append((v00, v11, v01))
    lengths = {}
    for cell in cells:
        for a, b in ((0, 1), (0, 2), (1, 2)):
            v, w = sorted((cell[a], cell[b]))
            if (v, w) in lengths:
                continue
            di = _torus_step(v % n, w % n, n)
            dj = _torus_step(v // n, w // n, n)
            lengths[(v, w)] = h * math.hypot(di, dj)
    return build_mesh(verts, cells, MetricSpec(edge_lengths=lengths))


def _torus_step(a, b, n):
    d = (b - a) % n
    return d - n if d > n // 2 else d


def torus_cycles(mesh, n):
    """Loop chains generating H_1 of the n x n torus: x-loop and y-loop.

    Chains are maps edge-index -> integer weight on the canonical (sorted)
    edge orientation.
    """
    def vid(i, j):
        return (i % n) + n * (j % n)

    def loop(vertices):
        chain = {}
        for a, b in zip(vertices, vertices[1:] + vertices[:1]):
            v, w = sorted((a, b))
            ei = mesh.simplex_index[1][(v, w)]
            chain[ei] = chain.get(ei, 0) + (1 if a == v else -1)
        return chain

    loop_x = loop([vid(i, 0) for i in range(n)])
    loop_y = loop([vid(0, j) for j in range(n)])
    return loop_x, loop_y


def torus_cocycles(mesh, n):
    """Closed integer 1-cochains dual to the coordinate directions.

    ``eta_x`` counts signed wraps of the x coordinate, so it has holonomy 1
    around the x-loop and 0 around the y-loop; ``eta_y`` likewise.
    """
    ne = mesh.n_edges
    eta_x = np.zeros(ne)
    eta_y = np.zeros(ne)
    for ei, (v, w) in enumerate(mesh.simplices[1]):
        iv, jv = v % n, v // n
        iw, jw = w % n, w // n
        di, dj = _torus_step(iv, iw, n), _torus_step(jv, jw, n)
        if iv + di >= n:
            eta_x[ei] = 1.0
        elif iv + di < 0:
            eta_x[ei] = -1.0
        if jv + dj >= n:
            eta_y[ei] = 1.0
        elif jv + dj < 0:
            eta_y[ei] = -1.0
    return eta_x, eta_y


# ---------------------------------------------------------------------------
# cylinders (flat and hyperbolic metric)


def _cylinder_topology(n_x, n_t):
    """Vertices/cells for a grid cylinder: rows 0..n_x in x, columns wrap."""
    def vid(i, j):
        return (j % n_t) + n_t * i

    cells = []
    for i in range(n_x):
        for j in range(n_t):
            v00, v01 = vid(i, j), vid(i, j + 1)
            v10, v11 = vid(i + 1, j), vid(i + 1, j + 1)
            cells.append((v00, v10, v11))
            cells.append((v00, v11, v01))
    return vid, cells


def hyperbolic_cylinder_mesh(x_min, x_max, n_x, n_t):
    """Cylinder with metric dx^2 + cosh(x)^2 dtheta^2 on [x_min, x_max] x S^1.

    Edge lengths sample the metric at edge midpoints, so every discrete
    circle {x = const} has length exactly 2*pi*cosh(x).
    """
    if not (x_min < x_max and n_x >= 3 and n_t >= 3):
        raise ValueError("need x_min < x_max and n_x, n_t >= 3")
    dx = (x_max - x_min) / n_x
    dt = 2 * math.pi / n_t
    vid, cells = _cylinder_topology(n_x, n_t)
    verts = np.array([[x_min + dx * (k // n_t), dt * (k % n_t)]
                      for k in range((n_x + 1) * n_t)])
    lengths = {}
    for cell in cells:
        for a, b in ((0, 1), (0, 2), (1, 2)):
            v, w = sorted((cell[a], cell[b]))
            if (v, w) in lengths:
                continue
            xi, xj = verts[v][0], verts[w][0]
            ddx = xj - xi
            ddt = dt * _torus_step(v % n_t, w % n_t, n_t)
            xm = 0.5 * (xi + xj)
            lengths[(v, w)] = math.hypot(ddx, math.cosh(xm) * ddt)
    return build_mesh(verts, cells, MetricSpec(edge_lengths=lengths))


def flat_cylinder_mesh(n_x, n_t, height=1.0, circumference=1.0):
    """Flat cylinder [0, height] x S^1 with the given circumference."""
    if n_x < 2 or n_t < 3:
        raise ValueError("need n_x >= 2 and n_t >= 3")
    dx = height / n_x
    dt = circumference / n_t
    vid, cells = _cylinder_topology(n_x, n_t)
    verts = np.array([[dx * (k // n_t), dt * (k % n_t)]
                      for k in range((n_x + 1) * n_t)])
    lengths = {}
    for cell in cells:
        for a, b in ((0, 1), (0, 2), (1, 2)):
            v, w = sorted((cell[a], cell[b]))
            if (v, w) in lengths:
                continue
            ddx = verts[w][0] - verts[v][0]
            ddt = dt * _torus_step(v % n_t, w % n_t, n_t)
            lengths[(v, w)] = math.hypot(ddx, ddt)
    return build_mesh(verts, cells, MetricSpec(edge_lengths=lengths))


def cylinder_cycles(mesh, n_x, n_t):
    """Core loop (absolute cycle) and transversal arc (relative cycle)."""
    def vid(i, j):
        return (j % n_t) + n_t * i

    core_row = n_x // 2
    core = {}
    for j in range(n_t):
        a, b = vid(core_row, j), vid(core_row, j + 1)
        v, w = sorted((a, b))
        ei = mesh.simplex_index[1][(v, w)]
        core[ei] = core.get(ei, 0) + (1 if a == v else -1)
    arc = {}
    for i in range(n_x):
        a, b = vid(i, 0), vid(i + 1, 0)
        v, w = sorted((a, b))
        ei = mesh.simplex_index[1][(v, w)]
        arc[ei] = arc.get(ei, 0) + (1 if a == v else -1)
    return core, arc


def cylinder_cocycles(mesh, n_x, n_t):
    """Cochains dual to the cylinder cycles.

    ``eta_wind`` counts theta wraps (holonomy 1 on the core loop, 0 on the
    arc); ``eta_step`` is the coboundary of the indicator of the upper half,
    vanishes on boundary edges, and integrates to 1 along the arc.
    """
    ne = mesh.n_edges
    eta_wind = np.zeros(ne)
    eta_step = np.zeros(ne)
    mid_row = n_x // 2
    for ei, (v, w) in enumerate(mesh.simplices[1]):
        jv, jw = v % n_t, w % n_t
        iv, iw = v // n_t, w // n_t
        dj = _torus_step(jv, jw, n_t)
        if jv + dj >= n_t:
            eta_wind[ei] = 1.0
        elif jv + dj < 0:
            eta_wind[ei] = -1.0
        fv = 1.0 if iv > mid_row else 0.0
        fw = 1.0 if iw > mid_row else 0.0
        eta_step[ei] = fw - fv
    return eta_wind, eta_step


# ---------------------------------------------------------------------------
# flat disk


def flat_disk_mesh(n_r, n_t, radius=1.0):
    """Euclidean disk: center vertex plus n_r concentric rings of n_t points."""
    if n_r < 1 or n_t < 3:
        raise ValueError("need n_r >= 1 and n_t >= 3")
    verts = [[0.0, 0.0]]
    for k in range(1, n_r + 1):
        r = radius * k / n_r
        for j in range(n_t):
            ang = 2 * math.pi * j / n_t
            verts.append([r * math.cos(ang), r * math.sin(ang)])

    def rid(k, j):
        return 1 + (k - 1) * n_t + (j % n_t)

    cells = []
    for j in range(n_t):
        cells.append((0, rid(1, j), rid(1, j + 1)))
    for k in range(1, n_r):
        for j in range(n_t):
            a, b = rid(k, j), rid(k, j + 1)
            c, d = rid(k + 1, j), rid(k + 1, j + 1)
            cells.append((a, c, d))
            cells.append((a, d, b))
    return build_mesh(np.array(verts), cells)


def disk_boundary_antipodes(mesh, n_r, n_t):
    """Vertex ids of the theta = 0 and theta = pi points on the outer ring."""
    if n_t % 2:
        raise ValueError("need an even n_t for antipodal boundary points")
    p = 1 + (n_r - 1) * n_t
    q = p + n_t // 2
    return p, q


# ---------------------------------------------------------------------------
# solid torus (d = 3)


def solid_torus_mesh(n_t=6, n_c=6, ring_radius=2.0, tube_radius=0.5):
    """Triangulated D^2 x S^1: wheel cross-section swept around a circle.

    Each prism between consecutive cross-sections splits into three
    tetrahedra along the within-layer vertex order, which keeps shared
    faces compatible.  Metric: Euclidean chords of the standard embedding.
    """
    if n_t < 3 or n_c < 3:
        raise ValueError("need n_t >= 3 and n_c >= 3")
    per = n_c + 1          # cross-section: center + ring

    def vid(layer, c):
        return (layer % n_t) * per + c

    cross = [(0.0, 0.0)] + [
        (tube_radius * math.cos(2 * math.pi * j / n_c),
         tube_radius * math.sin(2 * math.pi * j / n_c))
        for j in range(n_c)
    ]
    verts = []
    for layer in range(n_t):
        ang = 2 * math.pi * layer / n_t
        for (a, b) in cross:
            verts.append([(ring_radius + a) * math.cos(ang),
                          (ring_radius + a) * math.sin(ang), b])
    verts = np.array(verts)

    tris = [(0, 1 + j, 1 + (j + 1) % n_c) for j in range(n_c)]
    cells = []
    for layer in range(n_t):
        nxt = (layer + 1) % n_t
        for tri in tris:
            a, b, c = sorted(tri)
            v0, v1, v2 = vid(layer, a), vid(layer, b), vid(layer, c)
            w0, w1, w2 = vid(nxt, a), vid(nxt, b), vid(nxt, c)
            for tet in ((v0, v1, v2, w2), (v0, v1, w2, w1), (v0, w1, w2, w0)):
                cells.append(_orient_positive(tet, verts))
    return build_mesh(verts, cells)


def _orient_positive(tet, verts):
    p = verts[list(tet)]
    if np.linalg.det(p[1:] - p[0]) < 0:
        return (tet[1], tet[0], tet[2], tet[3])
    return tet


def solid_torus_meridian_data(mesh, n_t, n_c):
    """Meridian-disk chain (relative 2-cycle) and the winding 1-cocycle.

    The disk is the cross-section at layer 0; the cocycle counts wraps of
    the sweep angle and has holonomy 1 around the longitudinal core loop.
    """
    per = n_c + 1
    disk = {}
    for j in range(n_c):
        tri = tuple(sorted((0, 1 + j, 1 + (j + 1) % n_c)))
        fi = mesh.simplex_index[2][tri]
        # orient all cross-section triangles coherently (counterclockwise
        # in the cross-section chart equals the sorted order here)
        disk[fi] = disk.get(fi, 0) + 1
    eta = np.zeros(mesh.n_edges)
    for ei, (v, w) in enumerate(mesh.simplices[1]):
        lv, lw = v // per, w // per
        dl = _torus_step(lv, lw, n_t)
        if lv + dl >= n_t:
            eta[ei] = 1.0
        elif lv + dl < 0:
            eta[ei] = -1.0
    core = {}
    for layer in range(n_t):
        a, b = vid0 = layer * per, ((layer + 1) % n_t) * per
        v, w = sorted((a, b))
        ei = mesh.simplex_index[1][(v, w)]
        core[ei] = core.get(ei, 0) + (1 if a == v else -1)
    return disk, eta, core


# ---------------------------------------------------------------------------
# geodesics in the cosh-cylinder metric


def cosh_geodesic(x_top, delta_theta):
    """Length and turning point of the symmetric geodesic arc.

    Both endpoints sit on the circle {x = x_top}; the arc dips to a turning
    point x0 > 0 determined by the theta separation of the endpoints
    (Clairaut: cosh(x)^2 * dtheta/ds is conserved).  Returns
    ``(length, x0)`` with the turning point solved by bisection to 1e-12.
    """
    if not 0 < delta_theta < 2 * math.pi:
        raise ValueError("need 0 < delta_theta < 2*pi")

    def sweep(x0):
        J = math.cosh(x0)

        def f(t):  # substitution x = x0 + t^2 removes the sqrt singularity
            x = x0 + t * t
            c = math.cosh(x)
            return 2 * t * J / (c * math.sqrt(max(c * c - J * J, 1e-300)))

        val, _ = quad(f, 0.0, math.sqrt(x_top - x0), epsabs=1e-13, limit=200)
        return 2 * val

    lo, hi = 1e-12, x_top - 1e-12
    # sweep is decreasing in x0: a deep dip wanders far in theta
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if sweep(mid) > delta_theta:
            lo = mid
        else:
            hi = mid
    x0 = 0.5 * (lo + hi)
    J = math.cosh(x0)

    def flen(t):
        x = x0 + t * t
        c = math.cosh(x)
        return 2 * t * c / math.sqrt(max(c * c - J * J, 1e-300))

    val, _ = quad(flen, 0.0, math.sqrt(x_top - x0), epsabs=1e-13, limit=200)
    return 2 * val, x0


# ---------------------------------------------------------------------------
# catalog and oracles


class GeometrySpec:
    """Named geometry plus parameters, with closed-form oracle values."""

    KINDS = ("flat_torus", "flat_cylinder", "hyperbolic_cylinder", "flat_disk")

    def __init__(self, kind, **params):
        if kind not in self.KINDS:
            raise ValueError(f"unknown geometry kind {kind!r}")
        self.kind = kind
        self.params = params

    def build(self):
        p = self.params
        if self.kind == "flat_torus":
            return flat_torus_mesh(p.get("n", 8))
        if self.kind == "flat_cylinder":
            return flat_cylinder_mesh(
                p.get("n_x", 8), p.get("n_t", 8),
                p.get("height", 1.0), p.get("circumference", 1.0))
        if self.kind == "hyperbolic_cylinder":
            return hyperbolic_cylinder_mesh(
                p.get("x_min", -1.0), p.get("x_max", 1.0),
                p.get("n_x", 16), p.get("n_t", 16))
        return flat_disk_mesh(p.get("n_r", 4), p.get("n_t", 16),
                              p.get("radius", 1.0))

    def describe(self):
        return {"kind": self.kind, **self.params}


def oracle_values(spec, class_spec):
    """Analytic minimal mass and calibration description for a catalog entry.

    ``class_spec`` is ``(a, b)`` for the torus and a single coefficient for
    the cylinder circle class and the disk antipodal-pair problem.
    Raises ``KeyError`` for unsupported combinations.
    """
    kind = spec.kind
    p = spec.params
    if kind == "flat_torus":
        a, b = class_spec
        return {
            "min_mass": math.hypot(a, b),
            "calibration": "constant unit-norm 1-form in direction (a, b)",
            "provenance": "mass of a 1-form bounds its periods; equality for "
                          "the constant form on the flat torus",
        }
    if kind == "hyperbolic_cylinder":
        c = float(class_spec if np.isscalar(class_spec) else class_spec[0])
        x_min, x_max = p.get("x_min", -1.0), p.get("x_max", 1.0)
        x_star = min(max(0.0, x_min), x_max)
        attained = x_min < x_star < x_max
        return {
            "min_mass": abs(c) * 2 * math.pi * math.cosh(x_star),
            "calibration": "field cosh(x*)/cosh(x) along grad x; "
                           "flux through every circle equals the class",
            "attained": attained,
            "provenance": "divergence-free unit-norm bound; the circle at "
                          "the cosh minimum has that length",
        }
    if kind == "flat_cylinder":
        c = float(class_spec if np.isscalar(class_spec) else class_spec[0])
        return {
            "min_mass": abs(c) * p.get("circumference", 1.0),
            "calibration": "unit field along grad x",
            "provenance": "every separating circle has at least the "
                          "circumference as length",
        }
    if kind == "flat_disk":
        c = float(class_spec if np.isscalar(class_spec) else class_spec[0])
        return {
            "min_mass": abs(c) * 2 * p.get("radius", 1.0),
            "calibration": "unit field orthogonal to the chord",
            "provenance": "straight chord between antipodes is the geodesic",
        }
    raise KeyError(f"no oracle for {kind}")


def stable_norm(n, class_ab, schedule=None, return_solution=False):
    """Minimal mass in the torus class (a, b): full continuation run.

    Also returns the duality certificate: the calibration is rescaled to
    sup-norm one and paired with the minimizing differential; at the
    optimum the pairing equals the mass.
    """
    from . import leastgradient as lg

    a, b = class_ab
    if a == 0 and b == 0:
        return {"mass": 0.0, "pairing": 0.0, "gap": 0.0}
    mesh = flat_torus_mesh(n)
    eta_x, eta_y = torus_cocycles(mesh, n)
    eta = a * eta_x + b * eta_y
    problem = lg.LeastGradientProblem(mesh, eta=eta)
    sol = lg.continuation(problem, schedule)
    audit = lg.duality_gap(sol)
    out = {
        "mass": sol.mass,
        "pairing": audit["pairing_normalized"],
        "gap": audit["relative_gap"],
        "sup_norm": audit["calibration_sup"],
    }
    if return_solution:
        out["solution"] = sol
    return out


# ---------------------------------------------------------------------------
# point samplers for packing graphs


class FlatTorusSampler:
    """Uniform sampling on the unit flat torus."""

    dimension = 2

    def __init__(self, side=1.0):
        self.side = side
        self.boundary_names = ()

    def area(self):
        return self.side ** 2

    def sample(self, rng, n):
        return rng.random((n, 2)) * self.side

    def distance(self, p, q):
        d = np.abs(np.asarray(p) - np.asarray(q))
        d = np.minimum(d, self.side - d)
        return float(np.hypot(d[..., 0], d[..., 1]))

    def pairwise(self, pts):
        d = np.abs(pts[:, None, :] - pts[None, :, :])
        d = np.minimum(d, self.side - d)
        return np.hypot(d[..., 0], d[..., 1])

    def distance_to_set(self, cand, pts):
        d = np.abs(pts - np.asarray(cand)[None, :])
        d = np.minimum(d, self.side - d)
        return np.hypot(d[:, 0], d[:, 1])

    def grid_points(self, h, offset=(0.0, 0.0)):
        n = max(2, int(math.ceil(self.side / h)))
        xs = (np.arange(n) + offset[0]) * self.side / n
        ys = (np.arange(n) + offset[1]) * self.side / n
        gx, gy = np.meshgrid(xs % self.side, ys % self.side)
        return np.column_stack([gx.ravel(), gy.ravel()])


class FlatCylinderSampler:
    """Uniform sampling on [0, height] x circle(circumference)."""

    dimension = 2

    def __init__(self, height=1.0, circumference=1.0):
        self.height = height
        self.circumference = circumference
        self.boundary_names = ("x_min", "x_max")

    def area(self):
        return self.height * self.circumference

    def sample(self, rng, n):
        pts = rng.random((n, 2))
        pts[:, 0] *= self.height
        pts[:, 1] *= self.circumference
        return pts

    def distance(self, p, q):
        dx = p[0] - q[0]
        dy = abs(p[1] - q[1])
        dy = min(dy, self.circumference - dy)
        return math.hypot(dx, dy)

    def pairwise(self, pts):
        dx = pts[:, None, 0] - pts[None, :, 0]
        dy = np.abs(pts[:, None, 1] - pts[None, :, 1])
        dy = np.minimum(dy, self.circumference - dy)
        return np.hypot(dx, dy)

    def boundary_distances(self, p):
        return {"x_min": p[0], "x_max": self.height - p[0]}

    def distance_to_set(self, cand, pts):
        dx = pts[:, 0] - cand[0]
        dy = np.abs(pts[:, 1] - cand[1])
        dy = np.minimum(dy, self.circumference - dy)
        return np.hypot(dx, dy)

    def grid_points(self, h, offset=(0.0, 0.0)):
        nx = max(2, int(math.ceil(self.height / h)))
        ny = max(2, int(math.ceil(self.circumference / h)))
        xs = np.clip((np.arange(nx + 1) + offset[0]) * self.height / nx,
                     0.0, self.height)
        ys = ((np.arange(ny) + offset[1]) * self.circumference / ny) \
            % self.circumference
        gx, gy = np.meshgrid(xs, ys)
        return np.column_stack([gx.ravel(), gy.ravel()])


class HyperbolicCylinderSampler:
    """Sampling on [x_min, x_max] x S^1 with metric dx^2 + cosh(x)^2 dtheta^2.

    Distances integrate the metric along straight chart segments, which is
    accurate at packing scales (lengths well below the curvature scale).
    """

    dimension = 2

    def __init__(self, x_min=-1.0, x_max=1.0):
        self.x_min = x_min
        self.x_max = x_max
        self.boundary_names = ("x_min", "x_max")

    def area(self):
        return 2 * math.pi * (math.sinh(self.x_max) - math.sinh(self.x_min))

    def sample(self, rng, n):
        u = rng.random(n)
        s = math.sinh(self.x_min) + u * (math.sinh(self.x_max) - math.sinh(self.x_min))
        x = np.arcsinh(s)
        t = rng.random(n) * 2 * math.pi
        return np.column_stack([x, t])

    def distance(self, p, q):
        dx = q[0] - p[0]
        dt = (q[1] - p[1]) % (2 * math.pi)
        if dt > math.pi:
            dt -= 2 * math.pi
        # 5-point Simpson along the chart segment
        ts = np.array([0.0, 0.25, 0.5, 0.75, 1.0])
        xs = p[0] + dx * ts
        speed = np.sqrt(dx * dx + np.cosh(xs) ** 2 * dt * dt)
        return float((speed[0] + 4 * speed[1] + 2 * speed[2]
                      + 4 * speed[3] + speed[4]) / 12.0)

    def pairwise(self, pts):
        n = len(pts)
        out = np.zeros((n, n))
        for i in range(n):
            out[i, i + 1:] = self.distance_to_set(pts[i], pts[i + 1:])
            out[i + 1:, i] = out[i, i + 1:]
        return out

    def distance_to_set(self, cand, pts):
        if len(pts) == 0:
            return np.zeros(0)
        dx = pts[:, 0] - cand[0]
        dt = (pts[:, 1] - cand[1]) % (2 * math.pi)
        dt = np.where(dt > math.pi, dt - 2 * math.pi, dt)
        ts = np.array([0.0, 0.25, 0.5, 0.75, 1.0])
        xs = cand[0] + dx[:, None] * ts[None, :]
        speed = np.sqrt(dx[:, None] ** 2 + np.cosh(xs) ** 2 * dt[:, None] ** 2)
        return (speed[:, 0] + 4 * speed[:, 1] + 2 * speed[:, 2]
                + 4 * speed[:, 3] + speed[:, 4]) / 12.0

    def boundary_distances(self, p):
        return {"x_min": p[0] - self.x_min, "x_max": self.x_max - p[0]}

    def grid_points(self, h, offset=(0.0, 0.0)):
        nx = max(2, int(math.ceil((self.x_max - self.x_min) / h)))
        rows = []
        for i in range(nx + 1):
            x = self.x_min + (i + offset[0] * (i < nx)) * (self.x_max - self.x_min) / nx
            x = min(max(x, self.x_min), self.x_max)
            circ = 2 * math.pi * math.cosh(x)
            ny = max(3, int(math.ceil(circ / h)))
            ts = ((np.arange(ny) + offset[1]) * 2 * math.pi / ny) % (2 * math.pi)
            rows.append(np.column_stack([np.full(ny, x), ts]))
        return np.vstack(rows)
