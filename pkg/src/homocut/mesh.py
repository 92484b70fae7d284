"""Simplicial manifolds-with-boundary carrying a Regge (edge-length) metric.

The mesh is immutable after construction.  All metric information is stored
as edge lengths; volumes come from Cayley-Menger determinants and the dual
complex is circumcentric with a per-simplex barycentric fallback, so that
every dual volume is strictly positive.
"""

import math
from fractions import Fraction

import numpy as np
import scipy.sparse as sparse


class MeshError(ValueError):
    """Raised for non-manifold input, bad orientation or degenerate metric."""


class MetricSpec:
    """Edge-length assignment: explicit lengths or an analytic metric tensor.

    Parameters
    ----------
    edge_lengths : dict, optional
        Map from sorted vertex pairs ``(v, w)`` to positive lengths.
    metric_fn : callable, optional
        ``metric_fn(x) -> (m, m) ndarray``, a symmetric positive matrix in
        chart coordinates.  Sampled at edge midpoints.
    displacement_fn : callable, optional
        ``displacement_fn(xv, xw) -> ndarray`` giving the chart displacement
        from ``xv`` to ``xw``; needed for periodic charts where the naive
        difference would wrap the long way around.
    """

    def __init__(self, edge_lengths=None, metric_fn=None, displacement_fn=None):
        if (edge_lengths is None) == (metric_fn is None):
            raise ValueError("specify exactly one of edge_lengths, metric_fn")
        self.edge_lengths = edge_lengths
        self.metric_fn = metric_fn
        self.displacement_fn = displacement_fn

    @classmethod
    def euclidean(cls):
        return cls(metric_fn=lambda x: np.eye(len(x)))

    def evaluate(self, vertices, edges):
        """Lengths for each edge ``(v, w)`` in `edges` (sorted pairs)."""
        lengths = np.empty(len(edges))
        if self.edge_lengths is not None:
            for i, (v, w) in enumerate(edges):
                key = (v, w) if (v, w) in self.edge_lengths else (w, v)
                try:
                    lengths[i] = self.edge_lengths[key]
                except KeyError:
                    raise MeshError(f"no length for edge {(v, w)}")
            return lengths
        for i, (v, w) in enumerate(edges):
            xv = np.asarray(vertices[v], dtype=float)
            xw = np.asarray(vertices[w], dtype=float)
            if self.displacement_fn is not None:
                delta = np.asarray(self.displacement_fn(xv, xw), dtype=float)
            else:
                delta = xw - xv
            mid = xv + 0.5 * delta
            g = np.asarray(self.metric_fn(mid), dtype=float)
            q = float(delta @ g @ delta)
            if q <= 0:
                raise MeshError(f"metric not positive on edge {(v, w)}")
            lengths[i] = math.sqrt(q)
        return lengths


def _boundary_matrix(faces_index, simplices):
    """Signed incidence of k-simplices (rows: (k-1)-faces, sorted tuples)."""
    rows, cols, vals = [], [], []
    for j, s in enumerate(simplices):
        for i in range(len(s)):
            face = s[:i] + s[i + 1:]
            rows.append(faces_index[face])
            cols.append(j)
            vals.append((-1) ** i)
    shape = (len(faces_index), len(simplices))
    return sparse.csr_matrix((vals, (rows, cols)), shape=shape, dtype=np.int64)


def _cayley_menger_volume(lsq):
    """Volume of a k-simplex from squared edge lengths.

    `lsq` is a (k+1, k+1) symmetric matrix of squared distances.
    """
    k = lsq.shape[0] - 1
    if k == 0:
        return 1.0
    B = np.ones((k + 2, k + 2))
    B[0, 0] = 0.0
    B[1:, 1:] = lsq
    det = np.linalg.det(B)
    v2 = (-1) ** (k + 1) / (2 ** k * math.factorial(k) ** 2) * det
    if v2 <= 0:
        return -1.0
    return math.sqrt(v2)


def _embed_simplex(lsq):
    """Isometric coordinates (k+1, k) for a simplex with squared lengths `lsq`.

    Vertex 0 sits at the origin; uses the Gram matrix of edge vectors.
    """
    k = lsq.shape[0] - 1
    G = np.empty((k, k))
    for i in range(k):
        for j in range(k):
            G[i, j] = 0.5 * (lsq[0, i + 1] + lsq[0, j + 1] - lsq[i + 1, j + 1])
    # Cholesky with symmetric-eigen fallback for near-degenerate cells.
    try:
        L = np.linalg.cholesky(G)
    except np.linalg.LinAlgError:
        w, U = np.linalg.eigh(G)
        w = np.clip(w, 0.0, None)
        L = U @ np.diag(np.sqrt(w))
    coords = np.zeros((k + 1, k))
    coords[1:] = L
    return coords


def _circumcenter(pts):
    """Circumcenter of a simplex given local coordinates (n, m)."""
    a = pts[0]
    rel = pts[1:] - a
    rhs = 0.5 * np.einsum("ij,ij->i", rel, rel)
    center, *_ = np.linalg.lstsq(rel, rhs, rcond=None)
    return a + center


def _barycentric_inside(pts, x, tol=1e-12):
    """True if x lies strictly inside the simplex with vertices `pts`."""
    a = pts[0]
    rel = (pts[1:] - a).T
    lam, *_ = np.linalg.lstsq(rel, x - a, rcond=None)
    lams = np.concatenate([[1.0 - lam.sum()], lam])
    return bool(np.all(lams > tol))


class SimplicialMesh:
    """Oriented simplicial d-manifold-with-boundary with metric data.

    Construct through :func:`build_mesh`; instances are read-only.
    Simplices of every dimension are stored as sorted vertex tuples; the
    orientation of each top cell is the parity of its input vertex order
    relative to the sorted order.
    """

    def __init__(self, dimension, vertices, simplices, orientations,
                 boundary_ops, edge_lengths, cell_volumes, dual_volumes,
                 boundary_faces, boundary_face_orientation):
        self.dimension = dimension
        self.vertices = vertices
        self.simplices = simplices          # dict: k -> list of sorted tuples
        self.orientations = orientations    # signs of top cells
        self.boundary_ops = boundary_ops    # dict: k -> sparse (n_{k-1}, n_k)
        self.edge_lengths = edge_lengths
        self.cell_volumes = cell_volumes    # dict: k -> array
        self.dual_volumes = dual_volumes    # dict: k -> array
        self.boundary_faces = boundary_faces                    # bool (n_{d-1},)
        self.boundary_face_orientation = boundary_face_orientation
        self.simplex_index = {
            k: {s: i for i, s in enumerate(sx)} for k, sx in simplices.items()
        }
        self._is_boundary = self._mark_boundary_simplices()
        self._diameter = None

    # -- basic queries -------------------------------------------------

    def n_simplices(self, k):
        return len(self.simplices[k])

    @property
    def n_vertices(self):
        return len(self.simplices[0])

    @property
    def n_edges(self):
        return len(self.simplices[1]) if self.dimension >= 1 else 0

    def total_volume(self):
        return float(self.cell_volumes[self.dimension].sum())

    def has_boundary(self):
        return bool(self.boundary_faces.any())

    def _mark_boundary_simplices(self):
        d = self.dimension
        marks = {k: np.zeros(self.n_simplices(k), dtype=bool) for k in range(d + 1)}
        for fi in np.flatnonzero(self.boundary_faces):
            face = self.simplices[d - 1][fi]
            marks[d - 1][fi] = True
            for k in range(d - 1):
                for sub in _subsimplices(face, k):
                    marks[k][self.simplex_index[k][sub]] = True
        return marks

    def is_boundary_simplex(self, k):
        """Boolean mask of k-simplices contained in the boundary."""
        return self._is_boundary[k]

    def boundary_vertices(self):
        return np.flatnonzero(self._is_boundary[0])

    def diameter(self):
        """Graph-geodesic diameter estimate (doubled eccentricity of vertex 0)."""
        if self._diameter is None:
            n = self.n_vertices
            rows, cols, vals = [], [], []
            for i, (v, w) in enumerate(self.simplices[1]):
                rows.extend([v, w])
                cols.extend([w, v])
                vals.extend([self.edge_lengths[i]] * 2)
            g = sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))
            dist = sparse.csgraph.dijkstra(g, indices=0)
            self._diameter = 2.0 * float(np.max(dist[np.isfinite(dist)]))
        return self._diameter

    # -- DEC operators ---------------------------------------------------

    def hodge_star(self, k):
        """Diagonal Hodge star on k-cochains: dual volume / primal volume."""
        if not 0 <= k <= self.dimension:
            raise ValueError(f"degree {k} out of range for dimension {self.dimension}")
        return self.dual_volumes[k] / self.cell_volumes[k]

    def coboundary(self, k):
        """delta_k: k-cochains -> (k+1)-cochains (transpose of boundary)."""
        return self.boundary_ops[k + 1].T

    # -- boundary complex -------------------------------------------------

    def boundary_complex(self):
        """The boundary as a closed (d-1)-mesh, plus the face/vertex id maps.

        Returns ``(mesh, face_ids, vertex_ids)`` where ``face_ids[i]`` is the
        parent index of boundary cell ``i`` and likewise for vertices.
        Orientations are the ones induced from the bulk.
        """
        d = self.dimension
        face_ids = np.flatnonzero(self.boundary_faces)
        if len(face_ids) == 0:
            raise MeshError("mesh has no boundary")
        verts = sorted({v for fi in face_ids for v in self.simplices[d - 1][fi]})
        vmap = {v: i for i, v in enumerate(verts)}
        cells = []
        for fi in face_ids:
            face = self.simplices[d - 1][fi]
            cell = [vmap[v] for v in face]
            if self.boundary_face_orientation[fi] < 0 and len(cell) >= 2:
                cell[0], cell[1] = cell[1], cell[0]
            cells.append(cell)
        lengths = {}
        if d - 1 >= 1:
            for fi in face_ids:
                face = self.simplices[d - 1][fi]
                for a, b in _subsimplices(face, 1):
                    ei = self.simplex_index[1][(a, b)]
                    lengths[(vmap[a], vmap[b])] = self.edge_lengths[ei]
        coords = np.asarray([self.vertices[v] for v in verts], dtype=float)
        spec = MetricSpec(edge_lengths=lengths) if lengths else None
        sub = build_mesh(coords, cells, spec, closed_expected=True)
        return sub, face_ids, np.asarray(verts)

    def boundary_loops(self):
        """For d=2: boundary components as ordered vertex loops (parent ids).

        Each loop follows the induced boundary orientation.
        """
        if self.dimension != 2:
            raise MeshError("boundary_loops requires a 2-dimensional mesh")
        succ = {}
        for fi in np.flatnonzero(self.boundary_faces):
            v, w = self.simplices[1][fi]
            if self.boundary_face_orientation[fi] > 0:
                succ[v] = w
            else:
                succ[w] = v
        loops = []
        seen = set()
        for start in sorted(succ):
            if start in seen:
                continue
            loop = [start]
            seen.add(start)
            cur = succ[start]
            while cur != start:
                loop.append(cur)
                seen.add(cur)
                cur = succ[cur]
            loops.append(loop)
        return loops

    # -- curvature --------------------------------------------------------

    def boundary_mean_curvature(self, tol=None):
        """Discrete inward mean curvature per boundary hinge.

        For d=2 the hinge is a boundary vertex and the value is the turning
        angle of the boundary polyline toward the interior divided by the
        dual length of the hinge.  For d=3 the hinge is a boundary edge and
        the angle defect (pi minus the interior dihedral sum) takes the place
        of the turning angle.

        Returns ``(values, hinge_ids, strictly_mean_convex)``; for a closed
        mesh the fields are empty and the verdict vacuously true.
        """
        d = self.dimension
        if d < 2:
            raise MeshError("boundary curvature needs dimension >= 2")
        if not self.has_boundary():
            import warnings
            warnings.warn("mesh has no boundary; mean-convexity is vacuous")
            return np.array([]), np.array([], dtype=int), True
        if tol is None:
            tol = 1e-6 / self.diameter()
        if d == 2:
            values, hinges = self._boundary_turning_d2()
        elif d == 3:
            values, hinges = self._boundary_turning_d3()
        else:
            raise MeshError("boundary curvature implemented for d in {2, 3}")
        verdict = bool(values.size and values.min() > tol)
        return values, hinges, verdict

    def _interior_angle(self, cell, v):
        """Angle of top/interior simplex `cell` at vertex v (d=2 cells)."""
        a, b = [u for u in cell if u != v]
        la = self.edge_lengths[self.simplex_index[1][tuple(sorted((v, a)))]]
        lb = self.edge_lengths[self.simplex_index[1][tuple(sorted((v, b)))]]
        lc = self.edge_lengths[self.simplex_index[1][tuple(sorted((a, b)))]]
        cosang = (la * la + lb * lb - lc * lc) / (2 * la * lb)
        return math.acos(min(1.0, max(-1.0, cosang)))

    def _boundary_turning_d2(self):
        bverts = self.boundary_vertices()
        star = {v: [] for v in bverts}
        for cell in self.simplices[2]:
            for v in cell:
                if v in star:
                    star[v].append(cell)
        values = np.empty(len(bverts))
        for i, v in enumerate(bverts):
            angle = sum(self._interior_angle(cell, v) for cell in star[v])
            incident = [
                self.edge_lengths[fi]
                for fi in np.flatnonzero(self.boundary_faces)
                if v in self.simplices[1][fi]
            ]
            dual_len = 0.5 * sum(incident)
            values[i] = (math.pi - angle) / dual_len
        return values, bverts

    def _boundary_turning_d3(self):
        d = self.dimension
        bc, face_ids, vert_ids = self.boundary_complex()
        hinge_edges = []   # parent edge ids of boundary hinges
        for v, w in bc.simplices[1]:
            pv, pw = vert_ids[v], vert_ids[w]
            hinge_edges.append(self.simplex_index[1][tuple(sorted((int(pv), int(pw))))])
        values = np.empty(len(hinge_edges))
        # Dihedral angles from each tetrahedron incident on a hinge edge.
        tets_of_edge = {ei: [] for ei in hinge_edges}
        for tet in self.simplices[3]:
            for pair in _subsimplices(tet, 1):
                ei = self.simplex_index[1][pair]
                if ei in tets_of_edge:
                    tets_of_edge[ei].append(tet)
        for i, ei in enumerate(hinge_edges):
            v, w = self.simplices[1][ei]
            angle = 0.0
            for tet in tets_of_edge[ei]:
                angle += self._dihedral_angle(tet, v, w)
            # Dual length of the hinge within the boundary surface.
            j = bc.simplex_index[1][tuple(sorted(
                (int(np.where(vert_ids == v)[0][0]), int(np.where(vert_ids == w)[0][0]))))]
            values[i] = (math.pi - angle) / bc.dual_volumes[1][j] if bc.dual_volumes[1][j] > 0 \
                else (math.pi - angle)
        return values, np.asarray(hinge_edges)

    def _dihedral_angle(self, tet, v, w):
        idx = {u: i for i, u in enumerate(tet)}
        lsq = self._simplex_lsq(tet)
        pts = _embed_simplex(lsq)
        others = [u for u in tet if u not in (v, w)]
        p, q = pts[idx[v]], pts[idx[w]]
        axis = q - p
        axis = axis / np.linalg.norm(axis)
        vecs = []
        for u in others:
            r = pts[idx[u]] - p
            r = r - (r @ axis) * axis
            vecs.append(r / np.linalg.norm(r))
        cosang = float(np.clip(vecs[0] @ vecs[1], -1.0, 1.0))
        return math.acos(cosang)

    def _simplex_lsq(self, s):
        """Squared-length matrix of the simplex with vertex tuple `s`."""
        k = len(s)
        lsq = np.zeros((k, k))
        for i in range(k):
            for j in range(i + 1, k):
                e = tuple(sorted((s[i], s[j])))
                l = self.edge_lengths[self.simplex_index[1][e]]
                lsq[i, j] = lsq[j, i] = l * l
        return lsq

    def cell_gram(self, ti):
        """Gram matrix of base-vertex edge vectors of top cell `ti`."""
        s = self.simplices[self.dimension][ti]
        lsq = self._simplex_lsq(s)
        k = len(s) - 1
        G = np.empty((k, k))
        for i in range(k):
            for j in range(k):
                G[i, j] = 0.5 * (lsq[0, i + 1] + lsq[0, j + 1] - lsq[i + 1, j + 1])
        return G


def _subsimplices(s, k):
    """All (k)-dimensional sorted sub-tuples of the sorted tuple s."""
    from itertools import combinations
    return combinations(s, k + 1)


def build_mesh(vertices, simplices, metric=None, closed_expected=False):
    """Assemble a :class:`SimplicialMesh` from top-dimensional cells.

    Parameters
    ----------
    vertices : (n, m) array of chart coordinates.
    simplices : list of (d+1)-tuples; vertex order fixes each cell's
        orientation.
    metric : MetricSpec, optional; Euclidean chart metric if omitted.

    Raises :class:`MeshError` on non-manifold faces, inconsistent
    orientation or degenerate cells.
    """
    vertices = np.asarray(vertices, dtype=float)
    if vertices.ndim == 1:
        vertices = vertices[:, None]
    tops = [tuple(int(v) for v in s) for s in simplices]
    if not tops:
        raise MeshError("no top-dimensional cells")
    d = len(tops[0]) - 1
    if any(len(s) != d + 1 for s in tops):
        raise MeshError("cells of mixed dimension")
    if any(len(set(s)) != d + 1 for s in tops):
        raise MeshError("degenerate simplex (repeated vertex)")
    if metric is None:
        metric = MetricSpec.euclidean()

    orientations = np.array([_perm_sign(s) for s in tops], dtype=np.int64)
    sorted_tops = [tuple(sorted(s)) for s in tops]
    if len(set(sorted_tops)) != len(sorted_tops):
        raise MeshError("duplicate top cell")

    simplices_by_dim = {d: sorted(set(sorted_tops))}
    for k in range(d - 1, -1, -1):
        faces = set()
        for s in simplices_by_dim[k + 1]:
            faces.update(_subsimplices(s, k))
        simplices_by_dim[k] = sorted(faces)

    index = {k: {s: i for i, s in enumerate(sx)} for k, sx in simplices_by_dim.items()}
    boundary_ops = {
        k: _boundary_matrix(index[k - 1], simplices_by_dim[k]) for k in range(1, d + 1)
    }

    # Manifold check: every (d-1)-face has one or two cofaces.
    if d >= 1:
        coface_count = np.asarray(
            abs(boundary_ops[d]).sum(axis=1)).ravel() if d >= 1 else None
        if np.any(coface_count > 2):
            bad = simplices_by_dim[d - 1][int(np.argmax(coface_count))]
            raise MeshError(f"non-manifold face {bad} with >2 cofaces")

    # Orientation: the boundary of the oriented fundamental chain must vanish
    # on interior faces; the leftover signs orient the boundary complex.
    top_order = [index[d][s] for s in sorted_tops]
    sigma = np.zeros(len(simplices_by_dim[d]), dtype=np.int64)
    for pos, ti in enumerate(top_order):
        sigma[ti] = orientations[pos]
    residue = boundary_ops[d] @ sigma if d >= 1 else np.zeros(0, dtype=np.int64)
    coface_count = np.asarray(abs(boundary_ops[d]).sum(axis=1)).ravel()
    interior = coface_count == 2
    if np.any(residue[interior] != 0):
        bad = int(np.flatnonzero(interior & (residue != 0))[0])
        raise MeshError(
            f"inconsistent orientation at interior face {simplices_by_dim[d-1][bad]}")
    boundary_faces = coface_count == 1
    if closed_expected and boundary_faces.any():
        raise MeshError("expected a closed complex")
    if boundary_faces.any() and np.any(residue[boundary_faces] == 0):
        raise MeshError("orientation residue vanished on a boundary face")

    # Boundary must itself be closed: each (d-2)-simplex inside the boundary
    # meets exactly two boundary faces.
    if d >= 2 and boundary_faces.any():
        sub_count = {}
        for fi in np.flatnonzero(boundary_faces):
            for sub in _subsimplices(simplices_by_dim[d - 1][fi], d - 2):
                sub_count[sub] = sub_count.get(sub, 0) + 1
        bad = [s for s, c in sub_count.items() if c != 2]
        if bad:
            raise MeshError(f"boundary complex not closed at {bad[0]}")

    # Metric: edge lengths, then volumes per dimension.
    if d >= 1:
        edge_lengths = metric.evaluate(vertices, simplices_by_dim[1])
        if np.any(edge_lengths <= 0):
            raise MeshError("non-positive edge length")
    else:
        edge_lengths = np.zeros(0)

    def lsq_of(s):
        k = len(s)
        out = np.zeros((k, k))
        for i in range(k):
            for j in range(i + 1, k):
                l = edge_lengths[index[1][tuple(sorted((s[i], s[j])))]]
                out[i, j] = out[j, i] = l * l
        return out

    cell_volumes = {0: np.ones(len(simplices_by_dim[0]))}
    for k in range(1, d + 1):
        vols = np.empty(len(simplices_by_dim[k]))
        for i, s in enumerate(simplices_by_dim[k]):
            v = _cayley_menger_volume(lsq_of(s))
            if v <= 0:
                raise MeshError(
                    f"degenerate simplex {s}: edge lengths violate the "
                    f"simplex inequalities")
            vols[i] = v
        cell_volumes[k] = vols

    dual_volumes = _dual_volumes(d, simplices_by_dim, index, lsq_of, cell_volumes)

    mesh = SimplicialMesh(
        d, vertices, simplices_by_dim, sigma, boundary_ops, edge_lengths,
        cell_volumes, dual_volumes,
        boundary_faces if d >= 1 else np.zeros(0, dtype=bool),
        residue,
    )
    return mesh


def _perm_sign(s):
    seq = list(s)
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


def _dual_volumes(d, simplices_by_dim, index, lsq_of, cell_volumes):
    """Dual cell volumes per degree.

    d=2 uses circumcentric pieces for strictly acute triangles, barycentric
    otherwise; d=3 and d=1 use barycentric centers.  Either choice partitions
    each top cell, so vertex duals sum exactly to the total volume, and all
    entries are strictly positive.
    """
    duals = {k: np.zeros(len(simplices_by_dim[k])) for k in range(d + 1)}
    duals[d][:] = 1.0  # dual of a top cell is a point
    if d == 0:
        duals[0][:] = 1.0
        return duals
    if d == 1:
        for i, (v, w) in enumerate(simplices_by_dim[1]):
            l = math.sqrt(lsq_of((v, w))[0, 1])
            duals[0][index[0][(v,)]] += 0.5 * l
            duals[0][index[0][(w,)]] += 0.5 * l
        return duals

    for ti, top in enumerate(simplices_by_dim[d]):
        lsq = lsq_of(top)
        pts = _embed_simplex(lsq)
        center = _use_center(pts)
        if d == 2:
            _accumulate_dual_d2(top, pts, center, index, duals)
        else:
            _accumulate_dual_d3(top, pts, center, index, duals)
    return duals


def _use_center(pts):
    """Circumcenter if strictly interior, else barycenter."""
    c = _circumcenter(pts)
    if _barycentric_inside(pts, c, tol=1e-9):
        return c
    return pts.mean(axis=0)


def _accumulate_dual_d2(top, pts, center, index, duals):
    for i, v in enumerate(top):
        others = [j for j in range(3) if j != i]
        m1 = 0.5 * (pts[i] + pts[others[0]])
        m2 = 0.5 * (pts[i] + pts[others[1]])
        area = _tri_area(pts[i], m1, center) + _tri_area(pts[i], center, m2)
        duals[0][index[0][(v,)]] += area
    for i in range(3):
        for j in range(i + 1, 3):
            e = tuple(sorted((top[i], top[j])))
            mid = 0.5 * (pts[i] + pts[j])
            duals[1][index[1][e]] += np.linalg.norm(center - mid)


def _accumulate_dual_d3(top, pts, center, index, duals):
    from itertools import combinations
    face_centers = {}
    for f in combinations(range(4), 3):
        face_centers[f] = pts[list(f)].mean(axis=0)
    edge_mids = {}
    for e in combinations(range(4), 2):
        edge_mids[e] = 0.5 * (pts[e[0]] + pts[e[1]])
    # Vertex pieces: quarter of the cell (barycentric center chain).
    vol = abs(np.linalg.det(pts[1:] - pts[0])) / 6.0
    for i, v in enumerate(top):
        duals[0][index[0][(v,)]] += vol / 4.0
    # Edge duals: triangles (edge midpoint, face center, cell center).
    for e in combinations(range(4), 2):
        key = tuple(sorted((top[e[0]], top[e[1]])))
        area = 0.0
        for f in combinations(range(4), 3):
            if set(e) <= set(f):
                area += _tri_area(edge_mids[e], face_centers[f], center)
        duals[1][index[1][key]] += area
    # Face duals: distance from cell center to face center.
    for f in combinations(range(4), 3):
        key = tuple(sorted(top[i] for i in f))
        duals[2][index[2][key]] += np.linalg.norm(center - face_centers[f])


def _tri_area(a, b, c):
    u, v = b - a, c - a
    g = np.array([[u @ u, u @ v], [u @ v, v @ v]])
    det = g[0, 0] * g[1, 1] - g[0, 1] * g[1, 0]
    return 0.5 * math.sqrt(max(det, 0.0))


# ---------------------------------------------------------------------------
# file formats


def save_mesh(mesh, path):
    """Write the sectioned text format (vertices / simplices / metric)."""
    d = mesh.dimension
    with open(path, "w") as fh:
        fh.write(f"# homocut mesh dimension={d}\n")
        fh.write("[vertices]\n")
        for x in mesh.vertices:
            fh.write(" ".join(repr(float(c)) for c in x) + "\n")
        fh.write("[simplices]\n")
        for i, s in enumerate(mesh.simplices[d]):
            cell = list(s)
            if mesh.orientations[i] < 0:
                cell[0], cell[1] = cell[1], cell[0]
            fh.write(" ".join(str(v) for v in cell) + "\n")
        fh.write("[metric]\n")
        fh.write("edges\n")
        for i, (v, w) in enumerate(mesh.simplices[1]):
            fh.write(f"{v} {w} {float(mesh.edge_lengths[i])!r}\n")


def load_mesh(path):
    """Read the sectioned text format written by :func:`save_mesh`."""
    section = None
    vertices, cells = [], []
    metric_kind = None
    lengths = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("["):
                section = line.strip("[]").lower()
                continue
            if section == "vertices":
                vertices.append([float(t) for t in line.split()])
            elif section == "simplices":
                cells.append([int(t) for t in line.split()])
            elif section == "metric":
                if metric_kind is None:
                    metric_kind = line.lower()
                    continue
                if metric_kind == "edges":
                    v, w, l = line.split()
                    lengths[tuple(sorted((int(v), int(w))))] = float(l)
    if metric_kind == "euclidean" or metric_kind is None:
        spec = MetricSpec.euclidean()
    elif metric_kind == "edges":
        spec = MetricSpec(edge_lengths=lengths)
    else:
        raise MeshError(f"unknown metric section kind {metric_kind!r}")
    return build_mesh(np.asarray(vertices), cells, spec)


def load_off(path, metric_path=None):
    """Import an OFF triangle file, with an optional sidecar metric file.

    The sidecar lists ``v w length`` per line; without it the chart metric
    is Euclidean on the embedded coordinates.
    """
    with open(path) as fh:
        tokens = []
        for raw in fh:
            line = raw.split("#")[0].strip()
            if line:
                tokens.extend(line.split())
    if tokens[0] != "OFF":
        raise MeshError("not an OFF file")
    nv, nf = int(tokens[1]), int(tokens[2])
    pos = 4
    vertices = []
    for _ in range(nv):
        vertices.append([float(t) for t in tokens[pos:pos + 3]])
        pos += 3
    cells = []
    for _ in range(nf):
        cnt = int(tokens[pos])
        if cnt != 3:
            raise MeshError("only triangle OFF files are supported")
        cells.append([int(t) for t in tokens[pos + 1:pos + 4]])
        pos += 1 + cnt
    spec = MetricSpec.euclidean()
    if metric_path is not None:
        lengths = {}
        with open(metric_path) as fh:
            for raw in fh:
                line = raw.split("#")[0].strip()
                if not line:
                    continue
                v, w, l = line.split()
                lengths[tuple(sorted((int(v), int(w))))] = float(l)
        spec = MetricSpec(edge_lengths=lengths)
    return build_mesh(np.asarray(vertices), cells, spec)
