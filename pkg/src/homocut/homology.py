"""Simplicial homology over Q and R: relative and absolute bases, the
connecting homomorphism, dual cocycle representatives and the exact
sign-diagram audit.

Coefficients live in a field, so plain integer Gaussian elimination (via
``fractions.Fraction``) suffices; torsion never enters.  Real classes are
rational classes with floating coefficients against the same basis.  Chains
and cochains are indexed by the parent mesh's cells throughout; the three
complex kinds (absolute / relative / boundary) restrict which cells are
active.
"""

from fractions import Fraction

import numpy as np

from .mesh import MeshError

MAX_EXACT_CELLS = 4000


class HomologyError(ValueError):
    pass


# ---------------------------------------------------------------------------
# exact linear algebra on Fraction matrices (dense, small)


def _rref(rows, ncols):
    """In-place reduced row echelon form; returns pivot column list."""
    pivots = []
    r = 0
    for c in range(ncols):
        pivot = None
        for i in range(r, len(rows)):
            if rows[i][c] != 0:
                pivot = i
                break
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        inv = Fraction(1, 1) / rows[r][c]
        rows[r] = [x * inv for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    return pivots


def _nullspace(rows, ncols):
    """Kernel basis (list of Fraction vectors) of the matrix given by rows."""
    work = [list(row) for row in rows]
    pivots = _rref(work, ncols)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        v = [Fraction(0)] * ncols
        v[fc] = Fraction(1)
        for r, pc in enumerate(pivots):
            v[pc] = -work[r][fc]
        basis.append(v)
    return basis


def _solve(columns, rhs):
    """Solve sum_j x_j * columns[j] = rhs exactly; None if inconsistent."""
    n = len(rhs)
    m = len(columns)
    rows = [[columns[j][i] for j in range(m)] + [rhs[i]] for i in range(n)]
    pivots = _rref(rows, m + 1)
    if m in pivots:
        return None
    x = [Fraction(0)] * m
    for r, pc in enumerate(pivots):
        x[pc] = rows[r][m]
    return x


class _Eliminator:
    """Incremental row-reduction to test independence of inserted vectors."""

    def __init__(self, ncols):
        self.rows = []
        self.pivots = []
        self.ncols = ncols

    def insert(self, vec):
        """Reduce `vec`; if independent, absorb it and return True."""
        v = list(vec)
        for row, pc in zip(self.rows, self.pivots):
            if v[pc] != 0:
                f = v[pc]
                v = [a - f * b for a, b in zip(v, row)]
        for c in range(self.ncols):
            if v[c] != 0:
                inv = Fraction(1, 1) / v[c]
                v = [x * inv for x in v]
                self.rows.append(v)
                self.pivots.append(c)
                return True
        return False


# ---------------------------------------------------------------------------
# complexes


class ChainComplex:
    """A chain complex carved out of a mesh.

    kind:
      'absolute'  all cells of the mesh;
      'relative'  boundary cells deleted (quotient complex);
      'boundary'  only cells contained in the boundary.

    Boundary matrices are the parent's integer matrices restricted to the
    active rows and columns; d(d(x)) = 0 holds exactly in every kind.
    """

    def __init__(self, mesh, kind="absolute"):
        if kind not in ("absolute", "relative", "boundary"):
            raise ValueError(f"unknown complex kind {kind!r}")
        self.mesh = mesh
        self.kind = kind
        d = mesh.dimension
        self.top_degree = d - 1 if kind == "boundary" else d
        self.active = {}
        for k in range(d + 1):
            n = mesh.n_simplices(k)
            if kind == "absolute":
                mask = np.ones(n, dtype=bool)
            elif kind == "relative":
                mask = ~mesh.is_boundary_simplex(k)
            else:
                mask = mesh.is_boundary_simplex(k)
            self.active[k] = np.flatnonzero(mask)
        # degree -> position of parent cell in active list (or -1)
        self.position = {}
        for k in range(d + 1):
            pos = -np.ones(mesh.n_simplices(k), dtype=np.int64)
            pos[self.active[k]] = np.arange(len(self.active[k]))
            self.position[k] = pos

    def n_cells(self, k):
        if k < 0 or k > self.mesh.dimension:
            return 0
        return len(self.active[k])

    def boundary_rows(self, k):
        """Restricted boundary matrix of degree k as dense Fraction rows."""
        sub = self.mesh.boundary_ops[k][np.ix_(self.active[k - 1], self.active[k])]
        arr = np.asarray(sub.todense())
        return [[Fraction(int(x)) for x in row] for row in arr]

    # -- chain/cochain translation ------------------------------------

    def chain_to_vector(self, chain, k):
        """Dense Fraction vector over active k-cells from {parent_id: w}."""
        v = [Fraction(0)] * self.n_cells(k)
        for cid, w in chain.items():
            p = self.position[k][cid]
            if p < 0:
                continue  # quotient: boundary-supported part is zero here
            v[p] = v[p] + _as_fraction(w)
        return v

    def vector_to_chain(self, vec, k):
        out = {}
        for pos, w in enumerate(vec):
            if w != 0:
                out[int(self.active[k][pos])] = w
        return out

    def boundary_of_chain(self, chain, k):
        """Parent-indexed boundary of a parent-indexed k-chain (exact)."""
        op_csc = self.mesh.boundary_ops[k].tocsc()
        out = {}
        for cid, w in chain.items():
            wf = _as_fraction(w)
            s, e = op_csc.indptr[cid], op_csc.indptr[cid + 1]
            for idx in range(s, e):
                fid = int(op_csc.indices[idx])
                out[fid] = out.get(fid, Fraction(0)) + wf * int(op_csc.data[idx])
        return {k2: v for k2, v in out.items() if v != 0}


def _as_fraction(w):
    if isinstance(w, Fraction):
        return w
    if isinstance(w, (int, np.integer)):
        return Fraction(int(w))
    return Fraction(w).limit_denominator(10 ** 12)


def _guard(complex_, *degrees):
    for k in degrees:
        if complex_.n_cells(k) > MAX_EXACT_CELLS:
            raise HomologyError(
                f"complex too large for exact arithmetic in degree {k} "
                f"({complex_.n_cells(k)} cells); use certified generator data")


# ---------------------------------------------------------------------------
# homology bases


class HomologyBasis:
    """Basis of H_k for one complex kind: cycles as parent-indexed chains."""

    def __init__(self, mesh, kind, degree, field, chains, complex_):
        self.mesh = mesh
        self.kind = kind
        self.degree = degree
        self.field = field
        self.chains = chains
        self.complex = complex_
        self.basis_id = f"{kind}:H{degree}:{field}:n{mesh.n_simplices(0)}"

    @property
    def betti(self):
        return len(self.chains)

    def class_from_coefficients(self, coefficients):
        coeffs = list(coefficients)
        if len(coeffs) != self.betti:
            raise HomologyError(
                f"expected {self.betti} coefficients, got {len(coeffs)}")
        return HomologyClass(self, coeffs)


class HomologyClass:
    """Coefficient vector against a stored cycle basis."""

    def __init__(self, basis, coefficients):
        self.basis = basis
        if basis.field == "Q":
            self.coefficients = [_as_fraction(c) for c in coefficients]
        else:
            self.coefficients = [float(c) for c in coefficients]

    @property
    def degree(self):
        return self.basis.degree

    @property
    def field(self):
        return self.basis.field

    def is_zero(self):
        return all(c == 0 for c in self.coefficients)

    def representative(self):
        """A representative cycle as a parent-indexed chain."""
        out = {}
        for c, chain in zip(self.coefficients, self.basis.chains):
            if c == 0:
                continue
            for cid, w in chain.items():
                out[cid] = out.get(cid, 0) + c * w
        return {k: v for k, v in out.items() if v != 0}

    def to_json(self):
        return {
            "degree": self.degree,
            "field": self.field,
            "basis_id": self.basis.basis_id,
            "coefficients": [str(c) if self.field == "Q" else float(c)
                             for c in self.coefficients],
        }


def homology_basis(mesh, k, field="Q", kind="relative"):
    """Basis of H_k of the chosen complex, exact integer row reduction.

    For ``kind='relative'`` this is H_k(M, boundary); 'absolute' gives
    H_k(M); 'boundary' the homology of the boundary complex.
    """
    if field not in ("Q", "R"):
        raise HomologyError("field must be 'Q' or 'R'")
    cx = ChainComplex(mesh, kind)
    if k < 0 or k > cx.top_degree:
        return HomologyBasis(mesh, kind, k, field, [], cx)
    _guard(cx, max(k - 1, 0), k, min(k + 1, mesh.dimension))
    n_k = cx.n_cells(k)
    if k >= 1 and cx.n_cells(k - 1) > 0:
        drows = cx.boundary_rows(k)
        # kernel of the (n_{k-1} x n_k) boundary map
        kernel = _nullspace(drows, n_k)
    else:
        kernel = [[Fraction(1) if j == i else Fraction(0) for j in range(n_k)]
                  for i in range(n_k)]
    elim = _Eliminator(n_k)
    if k + 1 <= cx.top_degree and cx.n_cells(k + 1) > 0:
        brows = cx.boundary_rows(k + 1)
        for j in range(cx.n_cells(k + 1)):
            elim.insert([brows[i][j] for i in range(n_k)])
    chains = []
    for vec in kernel:
        if elim.insert(vec):
            chains.append(cx.vector_to_chain(vec, k))
    return HomologyBasis(mesh, kind, k, field, chains, cx)


def relative_homology_basis(mesh, k, field="Q"):
    return homology_basis(mesh, k, field, kind="relative")


def class_coordinates(basis, chain):
    """Coefficients of a cycle (parent-indexed) against `basis`, exactly.

    Solves chain = sum_i a_i B_i + boundary; raises if the chain is not a
    cycle of the complex or not in the span.
    """
    cx = basis.complex
    k = basis.degree
    vec = cx.chain_to_vector(chain, k)
    cols = [cx.chain_to_vector(c, k) for c in basis.chains]
    nb = len(cols)
    if k + 1 <= cx.top_degree and cx.n_cells(k + 1) > 0:
        brows = cx.boundary_rows(k + 1)
        for j in range(cx.n_cells(k + 1)):
            cols.append([brows[i][j] for i in range(cx.n_cells(k))])
    x = _solve(cols, vec)
    if x is None:
        raise HomologyError("chain is not a cycle of the complex (mod boundaries)")
    return x[:nb]


def connecting_homomorphism(mesh, cls, degree=None):
    """H_k(M, boundary) -> H_{k-1}(boundary): boundary of any representative.

    The output class is independent of the chosen representative.  Accepts a
    :class:`HomologyClass`, or a raw relative cycle as a parent-indexed
    chain together with its `degree`; for a chain the literal boundary
    chain is returned alongside the class.
    """
    if isinstance(cls, dict):
        if degree is None:
            raise HomologyError("degree required for a chain argument")
        k, rep, field = degree, cls, "Q"
        cx = ChainComplex(mesh, "relative")
    else:
        if cls.basis.kind != "relative":
            raise HomologyError("connecting homomorphism needs a relative class")
        k, rep, field = cls.degree, cls.representative(), cls.field
        cx = cls.basis.complex
    if k < 1:
        raise HomologyError("degree must be at least 1")
    bdry = cx.boundary_of_chain(rep, k) if rep else {}
    # the interior part must vanish: the representative is a relative cycle
    interior = ~mesh.is_boundary_simplex(k - 1)
    for cid, w in bdry.items():
        if interior[cid] and w != 0:
            raise HomologyError("representative is not a relative cycle")
    target = homology_basis(mesh, k - 1, field, kind="boundary")
    coords = class_coordinates(target, bdry) if bdry else [Fraction(0)] * target.betti
    if field == "R":
        coords = [float(c) for c in coords]
    out = target.class_from_coefficients(coords)
    if isinstance(cls, dict):
        return out, bdry
    return out


def cycle_mass(mesh, chain, degree):
    """Total-variation mass: sum |weight| x cell volume (0-cells count 1)."""
    vols = mesh.cell_volumes[degree]
    return float(sum(abs(float(w)) * vols[cid] for cid, w in chain.items()))


# ---------------------------------------------------------------------------
# cocycles and the dual-representative solve


def cocycle_basis(mesh, k, kind="absolute"):
    """Basis of H^k of the chosen complex as parent-indexed cochains."""
    cx = ChainComplex(mesh, kind)
    _guard(cx, max(k - 1, 0), k, min(k + 1, mesh.dimension))
    n_k = cx.n_cells(k)
    if k + 1 <= cx.top_degree and cx.n_cells(k + 1) > 0:
        # delta_k = transpose of boundary_{k+1}: rows indexed by (k+1)-cells
        brows = cx.boundary_rows(k + 1)
        rows = [[brows[i][j] for i in range(n_k)] for j in range(cx.n_cells(k + 1))]
        kernel = _nullspace(rows, n_k)
    else:
        kernel = [[Fraction(1) if j == i else Fraction(0) for j in range(n_k)]
                  for i in range(n_k)]
    elim = _Eliminator(n_k)
    if k >= 1 and cx.n_cells(k - 1) > 0:
        drows = cx.boundary_rows(k)  # delta_{k-1} columns = rows of boundary_k
        for i in range(cx.n_cells(k - 1)):
            elim.insert(drows[i])
    cochains = []
    for vec in kernel:
        if elim.insert(vec):
            cochains.append(cx.vector_to_chain(vec, k))
    return cochains, cx


def cup_pairing(mesh, eta, psi):
    """Integral over M of eta wedge psi for a 1-cochain and a (d-1)-cochain.

    Simplicial cup product on sorted-vertex simplices, evaluated against the
    oriented fundamental chain.  Inputs are parent-indexed maps or arrays;
    exact when both are Fraction-valued.
    """
    d = mesh.dimension
    total = 0
    eta_get = _getter(eta)
    psi_get = _getter(psi)
    for ti, s in enumerate(mesh.simplices[d]):
        a = eta_get(mesh.simplex_index[1][(s[0], s[1])])
        if a == 0:
            continue
        b = psi_get(mesh.simplex_index[d - 1][tuple(s[1:])])
        if b == 0:
            continue
        total += int(mesh.orientations[ti]) * a * b
    return total


def _getter(coch):
    if isinstance(coch, dict):
        return lambda i: coch.get(i, 0)
    arr = coch
    return lambda i: arr[i]


def _eval_cochain(coch, chain):
    get = _getter(coch)
    return sum(get(cid) * w for cid, w in chain.items())


class LefschetzError(HomologyError):
    pass


def lefschetz_dual(mesh, cls, return_certificate=True):
    """Closed 1-cochain eta representing the dual of a (d-1)-class.

    For a relative class the dual is an absolute cocycle tested against the
    relative (d-1)-cocycles; for an absolute class the dual vanishes on
    boundary edges and is tested against absolute (d-1)-cocycles.  In both
    cases eta is determined by

        integral_M eta wedge psi  =  psi(C)   for all test classes psi,

    with C a representative cycle of the class.  Raises
    :class:`LefschetzError` when the cup-pairing matrix is singular (mesh
    too coarse to represent the class).
    """
    d = mesh.dimension
    if cls.degree != d - 1:
        raise HomologyError("lefschetz_dual needs a class of degree d-1")
    own = cls.basis.kind
    if own == "relative":
        eta_kind, test_kind = "absolute", "relative"
    elif own == "absolute":
        eta_kind, test_kind = "relative", "absolute"
    else:
        raise HomologyError("class must live in the absolute or relative complex")
    etas, _ = cocycle_basis(mesh, 1, eta_kind)
    psis, _ = cocycle_basis(mesh, d - 1, test_kind)
    if len(etas) != len(psis):
        raise LefschetzError(
            f"cocycle ranks disagree ({len(etas)} vs {len(psis)}); "
            "mesh cannot realize the pairing")
    rep = cls.representative()
    rhs = [_as_fraction(_eval_cochain(psi, rep)) if cls.field == "Q"
           else _eval_cochain(psi, rep) for psi in psis]
    m = len(etas)
    if m == 0:
        eta = {}
        cert = {"pairings": [], "holonomies": []}
        return (eta, cert) if return_certificate else eta
    Q = [[_as_fraction(cup_pairing(mesh, etas[i], psis[j])) for j in range(m)]
         for i in range(m)]
    # conditions: sum_i x_i Q[i][j] = rhs[j], i.e. columns of the system
    # matrix are the rows Q[i]
    x = _solve(Q, [_as_fraction(v) for v in rhs])
    if x is None:
        raise LefschetzError("singular pairing matrix: mesh too coarse to "
                             "represent the class")
    eta = {}
    for xi, base in zip(x, etas):
        if xi == 0:
            continue
        for cid, w in base.items():
            eta[cid] = eta.get(cid, Fraction(0)) + xi * w
    eta = {k: v for k, v in eta.items() if v != 0}
    if cls.field == "R":
        eta = {k: float(v) for k, v in eta.items()}
    if not return_certificate:
        return eta
    achieved = [cup_pairing(mesh, eta, psi) for psi in psis]
    # holonomies are class-invariant only against cycles of eta's own kind
    cycles = homology_basis(mesh, 1, cls.field, kind=eta_kind)
    holonomies = [_eval_cochain(eta, c) for c in cycles.chains]
    cert = {
        "pairings": [(str(a), str(b)) if cls.field == "Q" else (float(a), float(b))
                     for a, b in zip(achieved, rhs)],
        "holonomies": [str(h) if cls.field == "Q" else float(h)
                       for h in holonomies],
    }
    return eta, cert


def class_from_cocycle(mesh, eta, own_kind="relative", field="Q"):
    """Recover class coefficients from a dual cocycle (round trip).

    Inverse of :func:`lefschetz_dual` on the basis: pair eta against the
    test cocycles and solve against the basis representatives' pairings.
    """
    d = mesh.dimension
    test_kind = "relative" if own_kind == "relative" else "absolute"
    basis = homology_basis(mesh, d - 1, field, kind=own_kind)
    psis, _ = cocycle_basis(mesh, d - 1, test_kind)
    m = basis.betti
    if m == 0:
        return basis.class_from_coefficients([])
    P = [[_as_fraction(_eval_cochain(psis[j], basis.chains[i])) for j in range(m)]
         for i in range(m)]
    rhs = [_as_fraction(cup_pairing(mesh, eta, psis[j])) for j in range(m)]
    x = _solve(P, rhs)
    if x is None:
        raise LefschetzError("pairing matrix singular in recovery")
    if field == "R":
        x = [float(v) for v in x]
    return basis.class_from_coefficients(x)


# ---------------------------------------------------------------------------
# boundary cycles and the sign diagram


class BoundaryCycle:
    """A (d-2)-chain supported on the boundary, with its mass."""

    def __init__(self, mesh, chain):
        self.mesh = mesh
        d = mesh.dimension
        self.degree = d - 2
        self.chain = {int(c): w for c, w in chain.items() if w != 0}
        marks = mesh.is_boundary_simplex(self.degree)
        for cid in self.chain:
            if not marks[cid]:
                raise HomologyError(f"cell {cid} is not on the boundary")
        if self.degree >= 1:
            cx = ChainComplex(mesh, "boundary")
            bdry = cx.boundary_of_chain(self.chain, self.degree)
            if any(w != 0 for w in bdry.values()):
                raise HomologyError("boundary cycle has nonzero boundary")
        self.mass = cycle_mass(mesh, self.chain, self.degree)

    @classmethod
    def zero(cls, mesh):
        return cls(mesh, {})

    def to_json(self):
        return {str(c): float(w) for c, w in self.chain.items()}


def verify_sign_diagram(mesh, cls):
    """Exact rational check of the boundary-compatibility square.

    Restricting the dual cocycle of a relative (d-1)-class to the boundary
    must agree, up to a universal sign, with the in-boundary dual of the
    connecting image of the class.  With the sorted-vertex cup product and
    the induced boundary orientation used here, the sign is (-1)^(d-1);
    this normalization is fixed once by the d=2 antipodal-pair test and
    then reused unchanged in every dimension.  Returns ``(ok, report)``;
    for a closed mesh the check is vacuous.
    """
    d = mesh.dimension
    if cls.field != "Q":
        raise HomologyError("sign diagram check requires rational coefficients")
    if not mesh.has_boundary():
        return True, {"vacuous": True, "reason": "closed mesh: trivial boundary"}
    eta, _ = lefschetz_dual(mesh, cls)
    # restriction to the boundary complex (parent edge ids kept)
    bmask = mesh.is_boundary_simplex(1)
    iota_eta = {cid: w for cid, w in eta.items() if bmask[cid]}
    beta = connecting_homomorphism(mesh, cls)
    zeta = _boundary_lefschetz_dual(mesh, beta)
    sign = Fraction((-1) ** (d - 1))
    target = {cid: sign * w for cid, w in zeta.items()}
    ok, witness = _cohomologous_on_boundary(mesh, iota_eta, target)
    report = {
        "vacuous": False,
        "betti_boundary": len(_boundary_coho_basis(mesh)[0]),
        "cohomologous": ok,
    }
    if not ok:
        report["witness"] = witness
    return ok, report


def _boundary_coho_basis(mesh):
    return cocycle_basis(mesh, 1, "boundary")


def _boundary_lefschetz_dual(mesh, beta):
    """Dual 1-cocycle of a (d-2)-class within the closed boundary complex."""
    d = mesh.dimension
    if beta.is_zero():
        return {}
    etas, cx = cocycle_basis(mesh, 1, "boundary")
    psis, _ = cocycle_basis(mesh, d - 2, "boundary")
    rep = beta.representative()
    m = len(etas)
    if m == 0:
        if any(w != 0 for w in rep.values()):
            raise LefschetzError("boundary cohomology cannot represent the class")
        return {}
    Q = [[_as_fraction(_boundary_cup(mesh, etas[i], psis[j])) for j in range(m)]
         for i in range(m)]
    rhs = [_as_fraction(_eval_cochain(psi, rep)) for psi in psis]
    x = _solve([[Q[i][j] for i in range(m)] for j in range(m)], rhs)
    if x is None:
        raise LefschetzError("singular pairing matrix on the boundary")
    out = {}
    for xi, base in zip(x, etas):
        if xi == 0:
            continue
        for cid, w in base.items():
            out[cid] = out.get(cid, Fraction(0)) + xi * w
    return {k: v for k, v in out.items() if v != 0}


def _boundary_cup(mesh, eta, psi):
    """Cup pairing within the boundary complex (eta degree 1, psi degree d-2).

    Summed against the induced orientation of the boundary faces.
    """
    d = mesh.dimension
    total = 0
    eta_get = _getter(eta)
    psi_get = _getter(psi)
    for fi in np.flatnonzero(mesh.boundary_faces):
        s = mesh.simplices[d - 1][fi]
        sign = int(mesh.boundary_face_orientation[fi])
        if d - 1 == 1:
            # 0-cochain psi on the back vertex
            a = eta_get(fi)
            b = psi_get(mesh.simplex_index[0][(s[1],)])
        else:
            a = eta_get(mesh.simplex_index[1][(s[0], s[1])])
            b = psi_get(mesh.simplex_index[d - 2][tuple(s[1:])])
        if a == 0 or b == 0:
            continue
        total += sign * a * b
    return total


def _cohomologous_on_boundary(mesh, u, v):
    """Exact test that 1-cochains u, v on boundary edges differ by delta(g)."""
    cx = ChainComplex(mesh, "boundary")
    diff = {}
    for cid in set(u) | set(v):
        w = _as_fraction(u.get(cid, 0)) - _as_fraction(v.get(cid, 0))
        if w != 0:
            diff[cid] = w
    if not diff:
        return True, None
    # solve delta(g) = diff: columns are delta of vertex indicators
    target = cx.chain_to_vector(diff, 1)
    brows = cx.boundary_rows(1)      # restricted (n0 x n1) boundary matrix
    cols = [brows[v] for v in range(cx.n_cells(0))]
    x = _solve(cols, target)
    if x is None:
        return False, {"difference_support": sorted(diff)}
    return True, None
