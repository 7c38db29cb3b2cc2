"""Global degrees of freedom, assembly of ``s + a`` and the constrained solve.

Full layout: the ``[P_k]^2`` block of every cell (in cell order), then one
``S_k(e)`` block per edge in edge order; an interface edge carries two
consecutive blocks, L (the subdomain-1 side) and R (the subdomain-2 side).

Every full degree of freedom is an affine image of the free unknowns,
``x_full = P x_free + offset``:

* cell blocks and interior-edge blocks are free,
* an interface L block is free and its R block reuses the same free unknowns
  with offset ``-Q_b phi`` (so ``u_b^L - u_b^R = Q_b phi``),
* a boundary block is fixed to ``Q_b g``.

Test functions are ``P v_free``: single valued on interface edges and zero on
the boundary.
"""
from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .basis import canonical_tangents, dim_p, edge_basis_values, edge_dim
from .cases import CoefficientField, ManufacturedCase
from .mesh import BOUNDARY, INTERFACE, PolyMesh
from .quadrature import gauss_01
from .weak_ops import LocalElement, build_local_element, default_degrees

log = logging.getLogger(__name__)

FREE, AFFINE, FIXED = 0, 1, 2


class NumericalError(RuntimeError):
    pass


@dataclass(frozen=True)
class AssemblyOptions:
    k: int = 1
    r: int | None = None  # weak-operator degree, default k - 1
    stabilizer: bool = True
    quad_boost: int = 0
    condense: bool = False
    workers: int | None = None
    trace_degree: int | None = None  # None: S_k(e); j: [P_j(e)]^2 edge values

    @property
    def weak_degree(self) -> int:
        return self.k - 1 if self.r is None else self.r


@dataclass
class DofMap:
    mesh: PolyMesh
    k: int
    n_interior: int  # per cell
    n_edge: int  # per edge block
    edge_block: np.ndarray  # L (or only) block of each edge
    edge_block_r: np.ndarray  # R block of interface edges, -1 elsewhere
    block_kind: np.ndarray  # FREE / AFFINE / FIXED per block
    cell_blocks: tuple[np.ndarray, ...]  # block used by each local edge of each cell
    full_to_free: np.ndarray
    n_free: int

    @property
    def n_blocks(self) -> int:
        return len(self.block_kind)

    @property
    def n_full(self) -> int:
        return self.mesh.n_cells * self.n_interior + self.n_blocks * self.n_edge

    def interior_dofs(self, c: int) -> np.ndarray:
        return c * self.n_interior + np.arange(self.n_interior)

    def block_dofs(self, b) -> np.ndarray:
        b = np.asarray(b)
        return self.mesh.n_cells * self.n_interior + b[..., None] * self.n_edge + np.arange(self.n_edge)

    def cell_dofs(self, c: int) -> np.ndarray:
        return np.concatenate([self.interior_dofs(c), self.block_dofs(self.cell_blocks[c]).ravel()])

    def prolongation(self) -> sp.csr_matrix:
        """Sparse ``P`` with ``x_full = P x_free + offset``."""
        rows = np.flatnonzero(self.full_to_free >= 0)
        return sp.csr_matrix((np.ones(len(rows)), (rows, self.full_to_free[rows])),
                             shape=(self.n_full, self.n_free))


def _side_is_r(mesh: PolyMesh, c: int, e: int) -> bool:
    if mesh.edge_kind[e] != INTERFACE:
        return False
    left, right = mesh.edge_cells[e]
    other = right if left == c else left
    return mesh.cell_subdomain[c] > mesh.cell_subdomain[other]


def build_dof_map(mesh: PolyMesh, k: int, trace_degree: int | None = None) -> DofMap:
    ni = 2 * dim_p(k)
    me = edge_dim(k, trace_degree)
    edge_block = np.empty(mesh.n_edges, dtype=np.int64)
    edge_block_r = np.full(mesh.n_edges, -1, dtype=np.int64)
    kinds = []
    for e in range(mesh.n_edges):
        edge_block[e] = len(kinds)
        if mesh.edge_kind[e] == BOUNDARY:
            kinds.append(FIXED)
        elif mesh.edge_kind[e] == INTERFACE:
            kinds.append(FREE)
            edge_block_r[e] = len(kinds)
            kinds.append(AFFINE)
        else:
            kinds.append(FREE)
    block_kind = np.array(kinds, dtype=np.int64)

    cell_blocks = []
    for c, ce in enumerate(mesh.cell_edges):
        cell_blocks.append(np.array([edge_block_r[e] if _side_is_r(mesh, c, e) else edge_block[e]
                                     for e in ce], dtype=np.int64))

    n_cells = mesh.n_cells
    n_full = n_cells * ni + len(block_kind) * me
    full_to_free = np.full(n_full, -1, dtype=np.int64)
    full_to_free[:n_cells * ni] = np.arange(n_cells * ni)
    nxt = n_cells * ni
    block_free = np.full(len(block_kind), -1, dtype=np.int64)
    for e in range(mesh.n_edges):
        b = edge_block[e]
        if block_kind[b] == FIXED:
            continue
        block_free[b] = nxt
        if edge_block_r[e] >= 0:
            block_free[edge_block_r[e]] = nxt
        nxt += me
    base = n_cells * ni
    for b in np.flatnonzero(block_free >= 0):
        full_to_free[base + b * me: base + (b + 1) * me] = block_free[b] + np.arange(me)
    return DofMap(mesh, k, ni, me, edge_block, edge_block_r, block_kind,
                  tuple(cell_blocks), full_to_free, nxt)


def _shape_key(verts: np.ndarray, centroid: np.ndarray, sub: int) -> bytes:
    return np.round((verts - centroid) * 1e13).astype(np.int64).tobytes() + bytes([sub, len(verts) % 256])


def _env_workers() -> int:
    try:
        return max(1, int(os.environ.get("WG_ELAST_THREADS", "1")))
    except ValueError:
        return 1


class Discretization:
    """Mesh, DOF map and per-shape local elements for one (mesh, k, r) choice.

    Cells that are translates of each other share a :class:`LocalElement`.
    """

    def __init__(self, mesh: PolyMesh, options: AssemblyOptions = AssemblyOptions()):
        self.mesh = mesh
        self.options = options
        self.k = options.k
        self.r = options.weak_degree
        self.trace_degree = options.trace_degree
        self.cell_degree, self.edge_degree, self.data_degree = default_degrees(
            self.k, self.r, options.quad_boost, self.trace_degree)
        self.dofmap = build_dof_map(mesh, self.k, self.trace_degree)

        keys: dict[bytes, int] = {}
        group = np.empty(mesh.n_cells, dtype=np.int64)
        reps = []
        for c in range(mesh.n_cells):
            key = _shape_key(mesh.cell_vertices(c), mesh.cell_centroid[c], int(mesh.cell_subdomain[c]))
            g = keys.get(key)
            if g is None:
                g = keys[key] = len(reps)
                reps.append(c)
            group[c] = g
        self.cell_group = group
        self.groups = [np.flatnonzero(group == g) for g in range(len(reps))]

        def build(c):
            return build_local_element(mesh.cell_vertices(c), self.k, self.r,
                                       self.cell_degree, self.edge_degree, self.trace_degree)

        workers = options.workers or _env_workers()
        if workers > 1 and len(reps) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                self.elements: list[LocalElement] = list(pool.map(build, reps))
        else:
            self.elements = [build(c) for c in reps]
        self._data_rules: dict[int, tuple] = {}
        self._edge_geom = self._edge_geometry()

    # -- per-group helpers -------------------------------------------------

    def group_dofs(self, g: int) -> np.ndarray:
        """Full dof indices of every cell in group ``g``, shape (n, n_local)."""
        return np.array([self.dofmap.cell_dofs(c) for c in self.groups[g]], dtype=np.int64)

    def element(self, c: int) -> LocalElement:
        return self.elements[self.cell_group[c]]

    def data_rule(self, g: int):
        """High-order cell rule (relative points, weights, interior basis values) of group ``g``."""
        if g not in self._data_rules:
            from .basis import ElementBasis
            from .quadrature import quad_polygon

            el = self.elements[g]
            rule = quad_polygon(el.vertices, self.data_degree, center=np.zeros(2))
            vals = ElementBasis(np.zeros(2), el.h, self.k).vector_values(rule.points)
            self._data_rules[g] = (rule.points, rule.weights, vals)
        return self._data_rules[g]

    def _edge_geometry(self):
        m = self.mesh
        p0 = m.vertices[m.edges[:, 0]]
        p1 = m.vertices[m.edges[:, 1]]
        length = np.hypot(*(p1 - p0).T)
        return p0, p1, length, canonical_tangents(p0, p1)

    def edge_rule(self, edges: np.ndarray, degree: int):
        """Quadrature points ``(ne, nq, 2)``, weights ``(ne, nq)`` and basis ``(ne, nq, m, 2)``."""
        p0, p1, length, tangent = (a[edges] for a in self._edge_geom)
        s, w = gauss_01(degree)
        pts = p0[:, None, :] + s[None, :, None] * (p1 - p0)[:, None, :]
        mid = 0.5 * (p0 + p1)
        vals = edge_basis_values(pts - mid[:, None, :], length[:, None], tangent[:, None, :], self.k,
                                 self.trace_degree)
        return pts, w[None, :] * length[:, None], vals

    def edge_project(self, edges: np.ndarray, func, degree: int | None = None) -> np.ndarray:
        """``Q_b`` of ``func(points (ne, nq, 2)) -> (ne, nq, 2)`` on each edge, shape (ne, m)."""
        if len(edges) == 0:
            return np.zeros((0, self.dofmap.n_edge))
        pts, w, vals = self.edge_rule(edges, degree or self.data_degree)
        M = np.einsum("eq,eqic,eqjc->eij", w, vals, vals)
        rhs = np.einsum("eq,eqic,eqc->ei", w, vals, func(pts))
        return np.linalg.solve(M, rhs[..., None])[..., 0]

    def edge_moments(self, edges: np.ndarray, func, degree: int | None = None) -> np.ndarray:
        if len(edges) == 0:
            return np.zeros((0, self.dofmap.n_edge))
        pts, w, vals = self.edge_rule(edges, degree or self.edge_degree)
        return np.einsum("eq,eqic,eqc->ei", w, vals, func(pts))

    def normal_out_of_sub1(self, edges: np.ndarray) -> np.ndarray:
        """Unit normal of each interface edge pointing out of its subdomain-1 cell."""
        m = self.mesh
        p0, p1, length, _ = (a[edges] for a in self._edge_geom)
        d = (p1 - p0) / length[:, None]
        n_left = np.column_stack([d[:, 1], -d[:, 0]])
        left = m.edge_cells[edges, 0]
        sign = np.where(m.cell_subdomain[left] == 1, 1.0, -1.0)
        return n_left * sign[:, None]

    def edge_side_sub(self, edges: np.ndarray) -> np.ndarray:
        return self.mesh.cell_subdomain[self.mesh.edge_cells[edges, 0]]

    # -- global objects ----------------------------------------------------

    def full_matrix(self, coeffs, stabilizer: bool | None = None) -> sp.csr_matrix:
        """Assembled ``a + s`` (or ``a`` alone) over the full layout."""
        if stabilizer is None:
            stabilizer = self.options.stabilizer
        rows, cols, vals = [], [], []
        mu = coeffs.mu_sub(self.mesh.cell_subdomain)
        lam = coeffs.lam_sub(self.mesh.cell_subdomain)
        for g, cells in enumerate(self.groups):
            el = self.elements[g]
            idx = self.group_dofs(g)
            K = el.stiffness(mu[cells[0]], lam[cells[0]], stabilizer)
            n = len(cells)
            rows.append(np.repeat(idx, el.n_local, axis=1).ravel())
            cols.append(np.tile(idx, (1, el.n_local)).ravel())
            vals.append(np.broadcast_to(K.ravel(), (n, K.size)).ravel())
        N = self.dofmap.n_full
        K = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(N, N)).tocsr()
        K.sum_duplicates()
        return K

    def load_vector(self, case: ManufacturedCase) -> np.ndarray:
        """``(f, v0)`` over cells plus ``sum <psi, vb>`` on interface L blocks."""
        dm = self.dofmap
        F = np.zeros(dm.n_full)
        sub = self.mesh.cell_subdomain
        for g, cells in enumerate(self.groups):
            rel, w, vals = self.data_rule(g)
            pts = rel[None] + self.mesh.cell_centroid[cells][:, None, :]
            fv = case.f(pts, sub[cells][:, None])
            loc = np.einsum("q,qic,nqc->ni", w, vals, fv)
            F[(cells[:, None] * dm.n_interior + np.arange(dm.n_interior)).ravel()] += loc.ravel()
        iface = np.flatnonzero(self.mesh.edge_kind == INTERFACE)
        if len(iface):
            n1 = self.normal_out_of_sub1(iface)
            mom = self.edge_moments(iface, lambda p: case.psi(p, n1[:, None, :]), self.data_degree)
            F[dm.block_dofs(dm.edge_block[iface]).ravel()] += mom.ravel()
        return F

    def offsets(self, case: ManufacturedCase) -> np.ndarray:
        dm = self.dofmap
        off = np.zeros(dm.n_full)
        bnd = np.flatnonzero(self.mesh.edge_kind == BOUNDARY)
        if len(bnd):
            sub = self.edge_side_sub(bnd)
            off[dm.block_dofs(dm.edge_block[bnd]).ravel()] = self.edge_project(
                bnd, lambda p: case.g(p, sub[:, None])).ravel()
        iface = np.flatnonzero(self.mesh.edge_kind == INTERFACE)
        if len(iface):
            off[dm.block_dofs(dm.edge_block_r[iface]).ravel()] = -self.edge_project(
                iface, case.phi).ravel()
        return off

    def interpolate(self, case: ManufacturedCase) -> np.ndarray:
        """Full coefficient vector of ``Q_h u`` using each side's exact trace."""
        dm = self.dofmap
        mesh = self.mesh
        out = np.zeros(dm.n_full)
        sub = mesh.cell_subdomain
        for g, cells in enumerate(self.groups):
            el = self.elements[g]
            pts, w, vals = self.data_rule(g)
            ap = pts[None] + mesh.cell_centroid[cells][:, None, :]
            uv = case.u(ap, sub[cells][:, None])
            M = np.einsum("q,qic,qjc->ij", w, vals, vals)
            rhs = np.einsum("q,qic,nqc->ni", w, vals, uv)
            out[(cells[:, None] * dm.n_interior + np.arange(dm.n_interior)).ravel()] = \
                np.linalg.solve(M, rhs.T).T.ravel()
        edges = np.arange(mesh.n_edges)
        left_sub = self.edge_side_sub(edges)
        iface = mesh.edge_kind == INTERFACE
        side = np.where(iface, 1, left_sub)
        out[dm.block_dofs(dm.edge_block).ravel()] = self.edge_project(
            edges, lambda p: case.u(p, side[:, None])).ravel()
        ie = np.flatnonzero(iface)
        if len(ie):
            out[dm.block_dofs(dm.edge_block_r[ie]).ravel()] = self.edge_project(
                ie, lambda p: case.u(p, 2)).ravel()
        return out


@dataclass
class SparseSystem:
    disc: Discretization
    case: ManufacturedCase
    matrix: sp.csr_matrix
    rhs: np.ndarray
    offset: np.ndarray  # full-layout values of fixed / affine parts
    condensed: dict | None = field(default=None, repr=False)

    @property
    def n_free(self) -> int:
        return self.disc.dofmap.n_free


@dataclass
class WGField:
    disc: Discretization
    coeffs: np.ndarray  # full layout
    residual: float = 0.0
    lame: CoefficientField | None = None

    @property
    def k(self) -> int:
        return self.disc.k

    def interior(self, c: int) -> np.ndarray:
        dm = self.disc.dofmap
        return self.coeffs[dm.interior_dofs(c)]

    def evaluate_interior(self, c: int, pts: np.ndarray) -> np.ndarray:
        """``u_0`` of cell ``c`` at absolute points."""
        from .basis import ElementBasis

        el = self.disc.element(c)
        basis = ElementBasis(self.disc.mesh.cell_centroid[c], el.h, self.k)
        return basis.evaluate(self.interior(c), pts)


def assemble(disc: Discretization, case: ManufacturedCase) -> SparseSystem:
    """Eliminate fixed and affine blocks and form the SPD system over free unknowns."""
    dm = disc.dofmap
    if dm.k != disc.k:
        raise ValueError("dof map and discretization disagree on k")
    offset = disc.offsets(case)
    F = disc.load_vector(case)
    P = dm.prolongation()
    if disc.options.condense:
        return _assemble_condensed(disc, case, F, offset, P)
    K = disc.full_matrix(case.coeffs)
    A = (P.T @ K @ P).tocsr()
    A = 0.5 * (A + A.T)
    b = P.T @ (F - K @ offset)
    return SparseSystem(disc, case, A.tocsr(), b, offset)


def _assemble_condensed(disc, case, F, offset, P) -> SparseSystem:
    """Static condensation of the cell blocks, cell by cell before scattering."""
    dm = disc.dofmap
    mesh = disc.mesh
    ni = dm.n_interior
    nfull = dm.n_full
    mu = case.coeffs.mu_sub(mesh.cell_subdomain)
    lam = case.coeffs.lam_sub(mesh.cell_subdomain)
    rows, cols, vals = [], [], []
    Fb = F.copy()
    Fb[:mesh.n_cells * ni] = 0.0
    recover = []
    for g, cells in enumerate(disc.groups):
        el = disc.elements[g]
        K = el.stiffness(mu[cells[0]], lam[cells[0]], disc.options.stabilizer)
        Kii, Kib = K[:ni, :ni], K[:ni, ni:]
        try:
            X = np.linalg.solve(Kii, np.column_stack([Kib, np.eye(ni)]))
        except np.linalg.LinAlgError as exc:
            raise NumericalError("singular cell block in static condensation") from exc
        KiiInv_Kib, KiiInv = X[:, :-ni], X[:, -ni:]
        Schur = K[ni:, ni:] - Kib.T @ KiiInv_Kib
        Schur = 0.5 * (Schur + Schur.T)
        idx = disc.group_dofs(g)[:, ni:]
        nb = idx.shape[1]
        rows.append(np.repeat(idx, nb, axis=1).ravel())
        cols.append(np.tile(idx, (1, nb)).ravel())
        vals.append(np.broadcast_to(Schur.ravel(), (len(cells), Schur.size)).ravel())
        Fi = F[(cells[:, None] * ni + np.arange(ni))]
        np.add.at(Fb, idx, -Fi @ KiiInv_Kib)
        recover.append((cells, idx, KiiInv, KiiInv_Kib, Fi))
    K = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(nfull, nfull)).tocsr()
    edge_free = np.unique(dm.full_to_free[mesh.n_cells * ni:][dm.full_to_free[mesh.n_cells * ni:] >= 0])
    Pe = P[:, edge_free]
    A = (Pe.T @ K @ Pe).tocsr()
    A = 0.5 * (A + A.T)
    b = Pe.T @ (Fb - K @ offset)
    return SparseSystem(disc, case, A.tocsr(), b, offset,
                        condensed={"edge_free": edge_free, "recover": recover})


def _cholmod_solve(A: sp.csr_matrix, b: np.ndarray) -> np.ndarray:
    from cvxopt import cholmod, matrix, spmatrix

    L = sp.tril(A).tocoo()
    M = spmatrix(L.data.tolist(), L.row.tolist(), L.col.tolist(), A.shape)
    x = matrix(b.astype(float).reshape(-1, 1))
    cholmod.options["supernodal"] = 2
    try:
        F = cholmod.symbolic(M, uplo="L")
        cholmod.numeric(M, F)
    except ArithmeticError as exc:
        raise NumericalError("Cholesky factorization failed: matrix is not positive definite") from exc
    cholmod.solve(F, x)
    return np.array(x).ravel()


def is_positive_definite(A: sp.spmatrix) -> bool:
    try:
        _cholmod_solve(sp.csr_matrix(A), np.zeros(A.shape[0]))
    except NumericalError:
        return False
    return True


def solve(system: SparseSystem, method: str = "direct") -> WGField:
    """Solve and rebuild the full coefficient vector."""
    A, b = system.matrix, system.rhs
    if A.shape[0] == 0:
        x = np.zeros(0)
    elif method == "direct":
        x = _cholmod_solve(A, b)
    elif method == "cg":
        d = A.diagonal()
        if np.any(d <= 0):
            raise NumericalError("non-positive diagonal; system is not SPD")
        M = sp.diags(1.0 / d)
        x, info = spla.cg(A, b, rtol=1e-13, atol=0.0, maxiter=20 * A.shape[0], M=M)
        if info != 0:
            raise NumericalError(f"conjugate gradients did not converge (info={info})")
    else:
        raise ValueError(f"unknown solver {method!r}")
    bn = np.linalg.norm(b)
    residual = float(np.linalg.norm(A @ x - b) / bn) if bn > 0 else float(np.linalg.norm(A @ x))
    if residual > 1e-10:
        log.warning("relative residual %.3e exceeds 1e-10", residual)

    disc = system.disc
    dm = disc.dofmap
    if system.condensed is None:
        full = dm.prolongation() @ x + system.offset
    else:
        free = np.zeros(dm.n_free)
        free[system.condensed["edge_free"]] = x
        full = dm.prolongation() @ free + system.offset
        ni = dm.n_interior
        for cells, idx, KiiInv, KiiInv_Kib, Fi in system.condensed["recover"]:
            ub = full[idx]
            ui = Fi @ KiiInv.T - ub @ KiiInv_Kib.T
            full[(cells[:, None] * ni + np.arange(ni)).ravel()] = ui.ravel()
    return WGField(disc, full, residual, system.case.coeffs)


def solve_case(mesh: PolyMesh, case: ManufacturedCase, options: AssemblyOptions = AssemblyOptions(),
               method: str = "direct") -> WGField:
    return solve(assemble(Discretization(mesh, options), case), method)


def local_stiffness(vertices, k: int, r: int | None, mu: float, lam: float) -> np.ndarray:
    el = build_local_element(vertices, k, r)
    return el.stiffness(mu, lam, stabilizer=False)


def local_stabilizer(vertices, k: int) -> np.ndarray:
    return build_local_element(vertices, k).S


def local_load(vertices, k: int, f) -> np.ndarray:
    """Moments of ``f(points) -> (..., 2)`` against the cell basis; edge blocks are zero."""
    vertices = np.asarray(vertices, float)
    el = build_local_element(vertices, k)
    from .mesh import polygon_centroid

    pts = el.cell_rule.points + polygon_centroid(vertices)
    out = np.zeros(el.n_local)
    out[:el.n_interior] = np.einsum("q,qic,qc->i", el.cell_rule.weights, el.interior_values, f(pts))
    return out


def dump_matrix(A: sp.spmatrix, path) -> None:
    """Coordinate text: ``row col value`` per line with 17 significant digits."""
    C = sp.coo_matrix(A)
    order = np.lexsort((C.col, C.row))
    with Path(path).open("w") as fh:
        for i, j, v in zip(C.row[order], C.col[order], C.data[order]):
            fh.write(f"{i} {j} {v:.17g}\n")


def lanczos_min_ritz(A: sp.spmatrix, steps: int = 30, seed: int = 0) -> float:
    """Smallest Ritz value after ``steps`` Lanczos iterations with full reorthogonalisation."""
    from scipy.linalg import eigh_tridiagonal

    n = A.shape[0]
    rng = np.random.default_rng(seed)
    q = rng.standard_normal(n)
    q /= np.linalg.norm(q)
    Q = [q]
    alpha, beta = [], []
    for j in range(min(steps, n)):
        w = A @ Q[-1]
        a = float(Q[-1] @ w)
        alpha.append(a)
        Qm = np.array(Q)
        w = w - Qm.T @ (Qm @ w)
        w = w - Qm.T @ (Qm @ w)
        b = float(np.linalg.norm(w))
        if b < 1e-14 or j == steps - 1:
            break
        beta.append(b)
        Q.append(w / b)
    return float(eigh_tridiagonal(np.array(alpha), np.array(beta[:len(alpha) - 1]), eigvals_only=True)[0])
