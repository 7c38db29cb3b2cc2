"""Element-local discrete weak divergence, gradient and strain.

Local degrees of freedom of a weak function ``{v0, vb}`` on a cell are the
``[P_k]^2`` coefficients of ``v0`` followed by one ``S_k(e)`` block per edge,
in cell-loop order.  Every weak operator is returned as a dense matrix from
those local coefficients to coefficients in the scaled monomial basis of
``P_r`` (``r = k - 1`` by default):

* ``D``: (dim P_r, n_local) for the weak divergence,
* ``G``: (4 dim P_r, n_local) for the weak gradient, blocks xx, xy, yx, yy,
* ``E``: (3 dim P_r, n_local) for the weak strain, blocks xx, yy, xy.

The strain is defined against symmetric polynomial tensors ``q`` by
``(eps_w v, q) = -(v0, div q) + <vb, q n>`` with ``div`` the row-wise
divergence.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import ElementBasis, canonical_tangent, dim_p, edge_basis_values, edge_dim, mass_matrix
from .mesh import polygon_centroid, polygon_diameter
from .quadrature import QuadratureRule, quad_edge, quad_polygon

_GRAD_TESTS = [np.array(m, float) for m in ([[1, 0], [0, 0]], [[0, 1], [0, 0]],
                                            [[0, 0], [1, 0]], [[0, 0], [0, 1]])]
_SYM_TESTS = [np.array(m, float) for m in ([[1, 0], [0, 0]], [[0, 0], [0, 1]], [[0, 1], [1, 0]])]
SYM_WEIGHTS = np.array([1.0, 1.0, 2.0])  # Frobenius norms of the symmetric tests


def default_degrees(k: int, r: int, quad_boost: int = 0,
                    trace_degree: int | None = None) -> tuple[int, int, int]:
    """Quadrature exactness for (cell forms, edge forms, non-polynomial data)."""
    j = k - 1 if trace_degree is None else trace_degree
    cell = max(2 * k + 3, 2 * r + 1) + quad_boost
    edge = max(2 * k + 3, k + r + 1, 2 * j + 1, j + r + 1) + quad_boost
    data = max(2 * k + 8, cell) + quad_boost
    return cell, edge, data


@dataclass
class EdgeData:
    start: np.ndarray
    end: np.ndarray
    normal: np.ndarray  # outward for this cell
    length: float
    rule: QuadratureRule
    basis: np.ndarray  # S_k(e) values at rule points, (nq, m, 2)
    mass: np.ndarray  # (m, m)
    trace_proj: np.ndarray  # Q_b of the trace of each interior function, (m, 2 dim P_k)


@dataclass
class LocalElement:
    """Everything the assembly needs from one cell shape.

    Geometry is stored relative to the cell centroid, so the matrices are
    shared by all translates of the cell.
    """

    k: int
    r: int
    trace_degree: int | None
    h: float
    area: float
    vertices: np.ndarray
    cell_rule: QuadratureRule
    interior_values: np.ndarray  # (nq, 2 dim P_k, 2)
    interior_mass: np.ndarray
    edges: list[EdgeData]
    offsets: np.ndarray  # start of each block; offsets[0] = 0 is the interior block
    D: np.ndarray
    G: np.ndarray
    E: np.ndarray
    test_mass: np.ndarray  # P_r scalar mass
    K_strain: np.ndarray = field(repr=False)  # E^T diag(M, M, 2M) E
    K_div: np.ndarray = field(repr=False)  # D^T M D
    S: np.ndarray = field(repr=False)  # stabilizer including the 1/h factor

    @property
    def n_local(self) -> int:
        return int(self.offsets[-1])

    @property
    def n_interior(self) -> int:
        return int(self.offsets[1])

    def stiffness(self, mu: float, lam: float, stabilizer: bool = True) -> np.ndarray:
        A = 2.0 * mu * self.K_strain + lam * self.K_div
        return A + self.S if stabilizer else A

    def edge_slice(self, j: int) -> slice:
        return slice(int(self.offsets[j + 1]), int(self.offsets[j + 2]))

    def sym_mass(self) -> np.ndarray:
        return np.kron(np.diag(SYM_WEIGHTS), self.test_mass)


def _tensor_moments(tests, elem_vals, wq, r_grads, edges, r_edge_vals, n_local, offsets):
    """Right-hand sides ``-(v0, div(Q w)) + <vb, Q w n>`` for each test matrix Q."""
    nr = r_grads.shape[1]
    out = np.zeros((len(tests) * nr, n_local))
    ni = elem_vals.shape[1]
    for t, Q in enumerate(tests):
        # row-wise divergence of Q w_j: (div)_a = sum_b Q_ab d_b w_j
        div = np.einsum("ab,qjb->qja", Q, r_grads)
        rows = slice(t * nr, (t + 1) * nr)
        out[rows, :ni] = -np.einsum("q,qia,qja->ji", wq, elem_vals, div)
        for j, ed in enumerate(edges):
            Qn = Q @ ed.normal
            out[rows, offsets[j + 1]:offsets[j + 2]] = np.einsum(
                "q,qia,a,qj->ji", ed.rule.weights, ed.basis, Qn, r_edge_vals[j])
    return out


def build_local_element(vertices: np.ndarray, k: int, r: int | None = None,
                        cell_degree: int | None = None, edge_degree: int | None = None,
                        trace_degree: int | None = None) -> LocalElement:
    """Assemble weak operators, local stiffness pieces and stabilizer for one cell.

    ``trace_degree`` swaps the edge space S_k(e) for ``[P_j(e)]^2``.
    """
    if r is None:
        r = k - 1
    if k < 1 or r < 0:
        raise ValueError(f"need k >= 1 and r >= 0, got k={k}, r={r}")
    if trace_degree is not None and trace_degree < 1:
        raise ValueError("trace_degree must be at least 1 so edges contain rigid-motion traces")
    cdeg, edeg, _ = default_degrees(k, r, trace_degree=trace_degree)
    cell_degree = cell_degree or cdeg
    edge_degree = edge_degree or edeg

    vertices = np.asarray(vertices, float)
    center = polygon_centroid(vertices)
    vertices = vertices - center
    origin = np.zeros(2)
    h = polygon_diameter(vertices)
    pk = ElementBasis(origin, h, k)
    pr = ElementBasis(origin, h, r)

    rule = quad_polygon(vertices, cell_degree, center=origin)
    wq = rule.weights
    elem_vals = pk.vector_values(rule.points)
    r_vals = pr.values(rule.points)
    r_grads = pr.grads(rule.points)

    m = len(vertices)
    me = edge_dim(k, trace_degree)
    offsets = np.concatenate([[0, 2 * pk.dim], 2 * pk.dim + me * np.arange(1, m + 1)]).astype(np.int64)
    n_local = int(offsets[-1])

    edges, r_edge_vals = [], []
    for j in range(m):
        a, b = vertices[j], vertices[(j + 1) % m]
        d = b - a
        length = float(np.hypot(*d))
        normal = np.array([d[1], -d[0]]) / length
        erule = quad_edge(a, b, edge_degree)
        ev = edge_basis_values(erule.points - 0.5 * (a + b), length, canonical_tangent(a, b), k,
                               trace_degree)
        emass = mass_matrix(ev, erule.weights)
        trace = np.einsum("q,qic,qjc->ij", erule.weights, ev, pk.vector_values(erule.points))
        edges.append(EdgeData(a, b, normal, length, erule, ev, emass, np.linalg.solve(emass, trace)))
        r_edge_vals.append(pr.values(erule.points))

    M_r = mass_matrix(r_vals, wq)
    M_r_inv = np.linalg.inv(M_r)
    nr = pr.dim

    # weak divergence: tests w in P_r, -(v0, grad w) + <vb . n, w>
    Rd = np.zeros((nr, n_local))
    Rd[:, :2 * pk.dim] = -np.einsum("q,qia,qja->ji", wq, elem_vals, r_grads)
    for j, ed in enumerate(edges):
        Rd[:, offsets[j + 1]:offsets[j + 2]] = np.einsum(
            "q,qia,a,qj->ji", ed.rule.weights, ed.basis, ed.normal, r_edge_vals[j])
    D = M_r_inv @ Rd

    Rg = _tensor_moments(_GRAD_TESTS, elem_vals, wq, r_grads, edges, r_edge_vals, n_local, offsets)
    G = np.kron(np.eye(4), M_r_inv) @ Rg

    Re = _tensor_moments(_SYM_TESTS, elem_vals, wq, r_grads, edges, r_edge_vals, n_local, offsets)
    M_sym = np.kron(np.diag(SYM_WEIGHTS), M_r)
    E = np.linalg.solve(M_sym, Re)

    S = np.zeros((n_local, n_local))
    for j, ed in enumerate(edges):
        jump = np.zeros((me, n_local))
        jump[:, :2 * pk.dim] = ed.trace_proj
        jump[:, offsets[j + 1]:offsets[j + 2]] -= np.eye(me)
        S += jump.T @ ed.mass @ jump
    S /= h

    K_strain = E.T @ M_sym @ E
    K_div = D.T @ M_r @ D
    return LocalElement(
        k=k, r=r, trace_degree=trace_degree, h=h, area=float(wq.sum()), vertices=vertices, cell_rule=rule,
        interior_values=elem_vals, interior_mass=mass_matrix(elem_vals, wq),
        edges=edges, offsets=offsets, D=D, G=G, E=E, test_mass=M_r,
        K_strain=0.5 * (K_strain + K_strain.T), K_div=0.5 * (K_div + K_div.T), S=0.5 * (S + S.T),
    )


def weak_divergence_matrix(vertices, k: int, r: int | None = None) -> np.ndarray:
    return build_local_element(vertices, k, r).D


def weak_gradient_matrix(vertices, k: int, r: int | None = None) -> np.ndarray:
    return build_local_element(vertices, k, r).G


def weak_strain_matrix(vertices, k: int, r: int | None = None) -> np.ndarray:
    return build_local_element(vertices, k, r).E


def symmetrize_gradient(G: np.ndarray) -> np.ndarray:
    """Map weak-gradient coefficient blocks (xx, xy, yx, yy) to strain blocks (xx, yy, xy)."""
    xx, xy, yx, yy = np.split(G, 4)
    return np.concatenate([xx, yy, 0.5 * (xy + yx)])


def local_dofs_of_polynomial(elem: LocalElement, f, center, degree: int | None = None) -> np.ndarray:
    """Local coefficients of ``Q_h f = {Q_0 f, Q_b f}`` on a cell centred at ``center``.

    ``f`` maps absolute points ``(..., 2)`` to values ``(..., 2)``.
    """
    k = elem.k
    pk = ElementBasis(np.zeros(2), elem.h, k)
    if degree is None:
        rule = elem.cell_rule
        vals = elem.interior_values
    else:
        rule = quad_polygon(elem.vertices, degree, center=np.zeros(2))
        vals = pk.vector_values(rule.points)
    out = np.zeros(elem.n_local)
    rhs = np.einsum("q,qic,qc->i", rule.weights, vals, f(rule.points + center))
    out[:elem.n_interior] = np.linalg.solve(mass_matrix(vals, rule.weights), rhs)
    for j, ed in enumerate(elem.edges):
        if degree is None:
            erule, ev = ed.rule, ed.basis
        else:
            erule = quad_edge(ed.start, ed.end, degree)
            mid = 0.5 * (ed.start + ed.end)
            ev = edge_basis_values(erule.points - mid, ed.length, canonical_tangent(ed.start, ed.end), k,
                                   elem.trace_degree)
        rhs = np.einsum("q,qic,qc->i", erule.weights, ev, f(erule.points + center))
        out[elem.edge_slice(j)] = np.linalg.solve(mass_matrix(ev, erule.weights), rhs)
    return out
