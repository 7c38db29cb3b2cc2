"""Scaled monomial bases on cells and edges, mass matrices and L2 projections.

Cell functions are ``((x - xc) / h)**a * ((y - yc) / h)**b`` with ``a + b <= p``
in graded lexicographic order.  Vector spaces ``[P_k]^2`` list all functions
of the first component before those of the second.  Symmetric tensors use the
three components (xx, yy, xy) with the Frobenius pairing, so the tensor mass
matrix is ``diag(M, M, 2M)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .quadrature import QuadratureRule, quad_edge, quad_polygon


def dim_p(p: int) -> int:
    return (p + 1) * (p + 2) // 2 if p >= 0 else 0


def edge_dim(k: int, trace_degree: int | None = None) -> int:
    """Dimension of the edge space: S_k(e) by default, ``[P_j(e)]^2`` for ``trace_degree=j``."""
    if trace_degree is not None:
        return 2 * (trace_degree + 1)
    return 3 if k == 1 else 2 * k


@lru_cache(maxsize=None)
def exponents(p: int) -> np.ndarray:
    return np.array([(d - j, j) for d in range(p + 1) for j in range(d + 1)], dtype=np.int64).reshape(-1, 2)


@dataclass(frozen=True)
class ElementBasis:
    center: np.ndarray
    h: float
    degree: int

    @property
    def dim(self) -> int:
        return dim_p(self.degree)

    def values(self, pts: np.ndarray) -> np.ndarray:
        """Shape ``pts.shape[:-1] + (dim,)``."""
        z = (np.asarray(pts) - self.center) / self.h
        e = exponents(self.degree)
        return z[..., 0:1] ** e[:, 0] * z[..., 1:2] ** e[:, 1]

    def grads(self, pts: np.ndarray) -> np.ndarray:
        """Shape ``pts.shape[:-1] + (dim, 2)``."""
        z = (np.asarray(pts) - self.center) / self.h
        e = exponents(self.degree)
        ex, ey = e[:, 0], e[:, 1]
        zx, zy = z[..., 0:1], z[..., 1:2]
        dx = ex * zx ** np.maximum(ex - 1, 0) * zy**ey
        dy = ey * zx**ex * zy ** np.maximum(ey - 1, 0)
        return np.stack([dx, dy], axis=-1) / self.h

    def vector_values(self, pts: np.ndarray) -> np.ndarray:
        """``[P_p]^2`` basis, shape ``(..., 2 * dim, 2)``."""
        v = self.values(pts)
        z = np.zeros_like(v)
        return np.concatenate([np.stack([v, z], -1), np.stack([z, v], -1)], axis=-2)

    def evaluate(self, coeffs: np.ndarray, pts: np.ndarray) -> np.ndarray:
        """Evaluate a ``[P_p]^2`` field with coefficients ``coeffs`` (length ``2 * dim``)."""
        v = self.values(pts)
        n = self.dim
        return np.stack([v @ coeffs[:n], v @ coeffs[n:]], axis=-1)


def canonical_tangent(p0, p1) -> np.ndarray:
    """Unit tangent of segment p0-p1, independent of endpoint order."""
    t = np.asarray(p1, float) - np.asarray(p0, float)
    t = t / np.hypot(*t)
    if t[0] < -1e-14 or (abs(t[0]) <= 1e-14 and t[1] < 0):
        t = -t
    return t


def canonical_tangents(p0: np.ndarray, p1: np.ndarray) -> np.ndarray:
    """Vectorised :func:`canonical_tangent` for arrays of segments ``(n, 2)``."""
    t = np.asarray(p1, float) - np.asarray(p0, float)
    t = t / np.hypot(t[:, 0], t[:, 1])[:, None]
    flip = (t[:, 0] < -1e-14) | ((np.abs(t[:, 0]) <= 1e-14) & (t[:, 1] < 0))
    t[flip] *= -1
    return t


@dataclass(frozen=True)
class EdgeBasis:
    """Basis of S_k(e).

    k = 1: rigid-motion traces ``(1, 0), (0, 1)`` and the rotation
    ``(-(y - ym), x - xm) / |e|``.  k >= 2: ``((s - s_mid) / |e|)**j`` times each
    unit vector, j < k, first component first.  ``trace_degree=j`` replaces
    S_k(e) by ``[P_j(e)]^2`` (used only for stabilizer-free experiments).
    """

    p0: np.ndarray
    p1: np.ndarray
    k: int
    trace_degree: int | None = None

    @property
    def midpoint(self) -> np.ndarray:
        return 0.5 * (np.asarray(self.p0) + np.asarray(self.p1))

    @property
    def length(self) -> float:
        return float(np.hypot(*(np.asarray(self.p1) - np.asarray(self.p0))))

    @property
    def dim(self) -> int:
        return edge_dim(self.k, self.trace_degree)

    def values(self, pts: np.ndarray) -> np.ndarray:
        """Shape ``(..., dim, 2)``."""
        return edge_basis_values(np.asarray(pts) - self.midpoint, self.length,
                                 canonical_tangent(self.p0, self.p1), self.k, self.trace_degree)


def edge_basis_values(rel: np.ndarray, length, tangent: np.ndarray, k: int,
                      trace_degree: int | None = None) -> np.ndarray:
    """Edge basis at points ``rel`` given relative to the edge midpoint.

    ``length`` must broadcast against ``rel.shape[:-1]`` and ``tangent`` against
    ``rel``, so many edges can be evaluated at once.
    """
    length = np.asarray(length, float)
    if trace_degree is not None:
        k = trace_degree + 1
    elif k == 1:
        one = np.ones(rel.shape[:-1])
        zero = np.zeros_like(one)
        rot = np.stack([-rel[..., 1], rel[..., 0]], -1) / length[..., None]
        return np.stack([np.stack([one, zero], -1), np.stack([zero, one], -1), rot], axis=-2)
    s = np.sum(rel * tangent, axis=-1) / length
    mono = s[..., None] ** np.arange(k)
    z = np.zeros_like(mono)
    return np.concatenate([np.stack([mono, z], -1), np.stack([z, mono], -1)], axis=-2)


def mass_matrix(values: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Gram matrix of basis values ``(npts, nb)`` or ``(npts, nb, ncomp)``."""
    if values.ndim == 2:
        return np.einsum("q,qi,qj->ij", weights, values, values)
    return np.einsum("q,qic,qjc->ij", weights, values, values)


def cell_rule(vertices, degree: int) -> QuadratureRule:
    return quad_polygon(vertices, degree)


def project_Q0(f, vertices, k: int, degree: int, basis: ElementBasis | None = None) -> np.ndarray:
    """L2 projection of a vector field ``f(pts) -> (..., 2)`` onto ``[P_k(T)]^2``."""
    from .mesh import polygon_centroid, polygon_diameter

    vertices = np.asarray(vertices, float)
    if basis is None:
        basis = ElementBasis(polygon_centroid(vertices), polygon_diameter(vertices), k)
    rule = quad_polygon(vertices, degree)
    phi = basis.vector_values(rule.points)
    M = mass_matrix(phi, rule.weights)
    rhs = np.einsum("q,qic,qc->i", rule.weights, phi, f(rule.points))
    return np.linalg.solve(M, rhs)


def project_Qb(f, p0, p1, k: int, degree: int) -> np.ndarray:
    """L2 projection of a vector field onto S_k(e)."""
    eb = EdgeBasis(np.asarray(p0, float), np.asarray(p1, float), k)
    rule = quad_edge(p0, p1, degree)
    phi = eb.values(rule.points)
    M = mass_matrix(phi, rule.weights)
    rhs = np.einsum("q,qic,qc->i", rule.weights, phi, f(rule.points))
    return np.linalg.solve(M, rhs)


def project_Qh_scalar(f, vertices, r: int, degree: int) -> np.ndarray:
    """L2 projection of a scalar field onto P_r(T)."""
    from .mesh import polygon_centroid, polygon_diameter

    vertices = np.asarray(vertices, float)
    basis = ElementBasis(polygon_centroid(vertices), polygon_diameter(vertices), r)
    rule = quad_polygon(vertices, degree)
    phi = basis.values(rule.points)
    return np.linalg.solve(mass_matrix(phi, rule.weights), phi.T @ (rule.weights * f(rule.points)))


def project_Qh_tensor(f, vertices, r: int, degree: int) -> np.ndarray:
    """L2 projection of a symmetric tensor field ``f(pts) -> (..., 2, 2)``.

    Returns the stacked (xx, yy, xy) coefficient blocks in P_r(T).
    """
    parts = [
        project_Qh_scalar(lambda p, i=i, j=j: f(p)[..., i, j], vertices, r, degree)
        for i, j in ((0, 0), (1, 1), (0, 1))
    ]
    return np.concatenate(parts)
