"""Quadrature on segments, triangles and (star-shaped) polygons."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

MAX_DEGREE = 40
MIN_FAN_AREA = 1e-15


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray  # (n, 2)
    weights: np.ndarray  # (n,)
    degree: int

    def integrate(self, values: np.ndarray) -> np.ndarray:
        return np.tensordot(self.weights, values, axes=(0, 0))


@lru_cache(maxsize=None)
def gauss_01(degree: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [0, 1] exact to ``degree``."""
    n = max(1, (degree + 2) // 2)
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1), 0.5 * w


@lru_cache(maxsize=None)
def triangle_rule(degree: int) -> tuple[np.ndarray, np.ndarray]:
    """Collapsed Gauss-Jacobi rule on the triangle (0,0), (1,0), (0,1).

    Conical product of a Gauss-Jacobi(1, 0) rule in the collapsed direction and
    a Gauss-Legendre rule across; all weights are positive and the rule is
    exact for total degree ``degree``.
    """
    n = max(1, (degree + 2) // 2)
    t, wt = roots_jacobi(n, 1.0, 0.0)
    xi = 0.5 * (t + 1)
    wxi = 0.25 * wt
    eta, weta = gauss_01(degree)
    X = np.repeat(xi, len(eta))
    Y = (1 - X) * np.tile(eta, n)
    W = np.repeat(wxi, len(eta)) * np.tile(weta, n)
    return np.column_stack([X, Y]), W


def _segments_intersect(p1, p2, q1, q2) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1, d2 = orient(q1, q2, p1), orient(q1, q2, p2)
    d3, d4 = orient(p1, p2, q1), orient(p1, p2, q2)
    return d1 * d2 < 0 and d3 * d4 < 0


def check_simple(vertices: np.ndarray) -> None:
    m = len(vertices)
    for i in range(m):
        for j in range(i + 2, m):
            if i == 0 and j == m - 1:
                continue
            if _segments_intersect(vertices[i], vertices[(i + 1) % m],
                                   vertices[j], vertices[(j + 1) % m]):
                raise ValueError(f"polygon is self-intersecting (edges {i} and {j})")


def quad_polygon(vertices: np.ndarray, degree: int, center=None) -> QuadratureRule:
    """Fan triangulation from the centroid composed with :func:`triangle_rule`.

    Zero-area fan triangles (collinear vertices) are dropped.
    """
    if degree > MAX_DEGREE:
        raise ValueError(f"quadrature degree {degree} exceeds {MAX_DEGREE}")
    vertices = np.asarray(vertices, dtype=float)
    check_simple(vertices)
    if center is None:
        from .mesh import polygon_centroid

        center = polygon_centroid(vertices)
    ref_pts, ref_w = triangle_rule(degree)
    pts, wts = [], []
    m = len(vertices)
    for i in range(m):
        a, b = vertices[i], vertices[(i + 1) % m]
        e1, e2 = a - center, b - center
        area = 0.5 * (e1[0] * e2[1] - e1[1] * e2[0])
        if area < -MIN_FAN_AREA:
            raise ValueError("polygon is not star-shaped with respect to its centroid")
        if area < MIN_FAN_AREA:
            continue
        pts.append(center + ref_pts[:, :1] * e1 + ref_pts[:, 1:] * e2)
        wts.append(2 * area * ref_w)
    return QuadratureRule(np.concatenate(pts), np.concatenate(wts), degree)


def quad_edge(p0, p1, degree: int) -> QuadratureRule:
    """Gauss rule with ceil((degree + 1) / 2) points on the segment p0-p1."""
    p0, p1 = np.asarray(p0, float), np.asarray(p1, float)
    s, w = gauss_01(degree)
    length = float(np.hypot(*(p1 - p0)))
    return QuadratureRule(p0 + s[:, None] * (p1 - p0), w * length, degree)
