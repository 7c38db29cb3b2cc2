import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import UNIT_SQUARE, degenerate_octagon, random_convex_polygon
from wg_elasticity.basis import (EdgeBasis, ElementBasis, dim_p, edge_dim, mass_matrix, project_Q0,
                                 project_Qb, project_Qh_scalar, project_Qh_tensor)
from wg_elasticity.mesh import gen_rect_mesh, polygon_area
from wg_elasticity.quadrature import quad_edge, quad_polygon, triangle_rule


# -- quadrature --------------------------------------------------------------

def test_unit_square_area():
    assert quad_polygon(UNIT_SQUARE, 2).weights.sum() == pytest.approx(1.0, abs=1e-14)


def test_unit_square_x2y2():
    q = quad_polygon(UNIT_SQUARE, 4)
    x, y = q.points.T
    assert q.integrate(x**2 * y**2) == pytest.approx(1 / 9, rel=1e-14)


def test_octagon_area():
    V = degenerate_octagon(0.25, 0.5, 0.25)
    q = quad_polygon(V, 3)
    assert q.weights.sum() == pytest.approx(polygon_area(V), rel=1e-14)
    assert np.all(q.weights > 0)


def test_edge_rules():
    q = quad_edge([0, 0], [1, 0], 0)
    assert q.weights.sum() == pytest.approx(1.0)
    q = quad_edge([0, 0], [1, 0], 2)
    assert q.integrate(q.points[:, 0] ** 2) == pytest.approx(1 / 3, rel=1e-14)
    q = quad_edge([0, 0], [0, 0.25], 1)
    assert q.integrate(q.points[:, 1]) == pytest.approx(1 / 32, rel=1e-14)


@pytest.mark.parametrize("d", [0, 1, 2, 5, 8, 13])
def test_edge_point_count(d):
    assert len(quad_edge([0, 0], [1, 1], d).weights) == int(np.ceil((d + 1) / 2))


def test_rejects_self_intersecting():
    bowtie = np.array([[0, 0], [1, 1], [1, 0], [0, 1]], float)
    with pytest.raises(ValueError, match="self-intersecting"):
        quad_polygon(bowtie, 2)


@given(st.integers(0, 20), st.integers(0, 2**31 - 1))
def test_polygon_rule_exactness(degree, seed):
    """Monomials up to the rule degree integrate exactly; the oracle is the
    boundary (Green) formula on each edge with a high-order Gauss rule."""
    rng = np.random.default_rng(seed)
    V = random_convex_polygon(rng)
    q = quad_polygon(V, degree)
    assert np.all(q.weights > 0)
    a = int(rng.integers(0, degree + 1))
    b = int(rng.integers(0, degree - a + 1))
    # int x^a y^b dA = int x^(a+1) y^b / (a+1) n_x ds
    exact = 0.0
    for i in range(len(V)):
        p0, p1 = V[i], V[(i + 1) % len(V)]
        e = quad_edge(p0, p1, a + b + 1)
        d = p1 - p0
        nx = d[1] / np.hypot(*d)
        exact += e.integrate(e.points[:, 0] ** (a + 1) * e.points[:, 1] ** b) * nx / (a + 1)
    got = q.integrate(q.points[:, 0] ** a * q.points[:, 1] ** b)
    assert got == pytest.approx(exact, rel=1e-12, abs=1e-14)


@pytest.mark.parametrize("degree", [1, 4, 9, 20])
def test_triangle_rule_positive_and_exact(degree):
    pts, w = triangle_rule(degree)
    assert np.all(w > 0) and w.sum() == pytest.approx(0.5)
    from math import factorial
    for a in range(degree + 1):
        b = degree - a
        exact = factorial(a) * factorial(b) / factorial(a + b + 2)
        assert w @ (pts[:, 0] ** a * pts[:, 1] ** b) == pytest.approx(exact, rel=1e-13)


# -- bases and mass matrices --------------------------------------------------

def test_dimensions():
    for k in range(1, 5):
        assert 2 * dim_p(k) == (k + 1) * (k + 2)
        assert 3 * dim_p(k - 1) == 3 * k * (k + 1) // 2
    assert edge_dim(1) == 3 and edge_dim(3) == 6


def test_p0_mass_unit_square():
    q = quad_polygon(UNIT_SQUARE, 2)
    b = ElementBasis(np.array([0.5, 0.5]), np.sqrt(2), 0)
    assert mass_matrix(b.values(q.points), q.weights) == pytest.approx(np.array([[1.0]]))


def test_p1_mass_unit_square():
    """Hand integration: int (x-1/2)^2 = 1/12 on the unit square, scaled by 1/h^2 = 1/2."""
    q = quad_polygon(UNIT_SQUARE, 2)
    b = ElementBasis(np.array([0.5, 0.5]), np.sqrt(2), 1)
    M = mass_matrix(b.values(q.points), q.weights)
    assert M == pytest.approx(np.diag([1.0, 1 / 24, 1 / 24]), abs=1e-15)


def test_k1_edge_mass():
    eb = EdgeBasis(np.array([0.0, 0.0]), np.array([1.0, 0.0]), 1)
    q = quad_edge(eb.p0, eb.p1, 4)
    M = mass_matrix(eb.values(q.points), q.weights)
    assert abs(M[0, 2]) < 1e-15 and abs(M[1, 2]) < 1e-15
    assert M == pytest.approx(M.T) and np.all(np.linalg.eigvalsh(M) > 0)
    assert M[2, 2] == pytest.approx(1 / 12)


def test_mass_conditioning_is_refinement_invariant():
    conds = []
    for n in (4, 8, 16, 32):
        m = gen_rect_mesh(n)
        V = m.cell_vertices(0)
        b = ElementBasis(m.cell_centroid[0], m.cell_diameter[0], 3)
        q = quad_polygon(V, 7)
        conds.append(np.linalg.cond(mass_matrix(b.values(q.points), q.weights)))
    assert max(conds) / min(conds) < 1.01


# -- projections ------------------------------------------------------------------

def test_q0_reproduces_polynomials(rng):
    V = random_convex_polygon(rng)
    f = lambda p: np.stack([1 + 2 * p[..., 0] - p[..., 1] ** 2, p[..., 0] * p[..., 1]], -1)
    from wg_elasticity.mesh import polygon_centroid, polygon_diameter
    b = ElementBasis(polygon_centroid(V), polygon_diameter(V), 2)
    c = project_Q0(f, V, 2, 8, b)
    q = quad_polygon(V, 6)
    assert np.allclose(b.evaluate(c, q.points), f(q.points), atol=1e-12)
    assert np.allclose(project_Q0(lambda p: np.zeros(p.shape), V, 2, 6), 0)


def test_q0_matches_least_squares_oracle():
    """f = (sin x, 0), k = 1 on the unit square against a dense midpoint-grid fit."""
    f = lambda p: np.stack([np.sin(p[..., 0]), 0 * p[..., 0]], -1)
    c = project_Q0(f, UNIT_SQUARE, 1, 14)
    n = 400
    g = (np.arange(n) + 0.5) / n
    X, Y = np.meshgrid(g, g)
    pts = np.column_stack([X.ravel(), Y.ravel()])
    b = ElementBasis(np.array([0.5, 0.5]), np.sqrt(2), 1)
    A = b.values(pts)
    ls = np.linalg.lstsq(A, np.sin(pts[:, 0]), rcond=None)[0]
    assert np.allclose(c[:3], ls, atol=1e-5)
    assert np.allclose(c[3:], 0, atol=1e-14)


def test_qb_hand_example():
    c = project_Qb(lambda p: np.stack([p[..., 0], 0 * p[..., 0]], -1), [0, 0], [1, 0], 1, 4)
    assert np.allclose(c, [0.5, 0, 0], atol=1e-15)


def test_qb_roundtrips():
    p0, p1 = np.array([0.2, 0.1]), np.array([0.6, 0.4])
    rot = lambda p: np.stack([-p[..., 1], p[..., 0]], -1)
    eb1 = EdgeBasis(p0, p1, 1)
    q = quad_edge(p0, p1, 6)
    c = project_Qb(rot, p0, p1, 1, 6)
    assert np.allclose(np.einsum("qic,i->qc", eb1.values(q.points), c), rot(q.points), atol=1e-14)
    lin = lambda p: np.stack([1 + p[..., 0], 2 - 3 * p[..., 1]], -1)
    eb2 = EdgeBasis(p0, p1, 2)
    c = project_Qb(lin, p0, p1, 2, 6)
    assert np.allclose(np.einsum("qic,i->qc", eb2.values(q.points), c), lin(q.points), atol=1e-14)


def test_qh_scalar_and_tensor():
    V = degenerate_octagon()
    assert np.allclose(project_Qh_scalar(lambda p: 3 + 0 * p[..., 0], V, 1, 4), [3, 0, 0], atol=1e-14)
    lin = lambda p: 1 + p[..., 0] - 2 * p[..., 1]
    from wg_elasticity.mesh import polygon_centroid, polygon_diameter
    b = ElementBasis(polygon_centroid(V), polygon_diameter(V), 1)
    c = project_Qh_scalar(lin, V, 1, 4)
    pts = np.array([[0.3, 0.7], [0.9, 0.2]])
    assert np.allclose(b.values(pts) @ c, lin(pts), atol=1e-13)
    T = project_Qh_tensor(lambda p: np.broadcast_to(np.array([[1.0, 2.0], [2.0, 3.0]]), p.shape[:-1] + (2, 2)),
                          V, 0, 2)
    assert np.allclose(T, [1, 3, 2])


def test_qh_strain_cell_average():
    """r = 0 projection of the Example 1 strain equals its cell average (fine composite midpoint oracle)."""
    from wg_elasticity.cases import CoefficientField, case_example1
    case = case_example1(CoefficientField(1, 1))
    V = np.array([[0.0, 0.0], [0.25, 0.0], [0.25, 0.25], [0.0, 0.25]])
    got = project_Qh_tensor(lambda p: case.strain(p, 1), V, 0, 16)
    n = 600
    g = (np.arange(n) + 0.5) / n * 0.25
    X, Y = np.meshgrid(g, g)
    eps = case.strain(np.stack([X, Y], -1), 1).mean(axis=(0, 1))
    assert np.allclose(got, [eps[0, 0], eps[1, 1], eps[0, 1]], atol=1e-5)


@given(st.integers(0, 2**31 - 1), st.integers(1, 3))
def test_projection_idempotent_and_orthogonal(seed, k):
    rng = np.random.default_rng(seed)
    V = random_convex_polygon(rng)
    w = rng.standard_normal(3)
    f = lambda p: np.stack([np.sin(w[0] * p[..., 0] + w[1] * p[..., 1]), np.exp(w[2] * p[..., 0])], -1)
    from wg_elasticity.mesh import polygon_centroid, polygon_diameter
    b = ElementBasis(polygon_centroid(V), polygon_diameter(V), k)
    c = project_Q0(f, V, k, 20, b)
    c2 = project_Q0(lambda p: b.evaluate(c, p), V, k, 20, b)
    assert np.allclose(c, c2, atol=1e-12 * (1 + np.abs(c).max()))
    q = quad_polygon(V, 20)
    phi = b.vector_values(q.points)
    resid = f(q.points) - b.evaluate(c, q.points)
    inner = np.einsum("q,qic,qc->i", q.weights, phi, resid)
    fn = np.sqrt(q.weights @ np.sum(f(q.points) ** 2, -1))
    pn = np.sqrt(np.einsum("q,qic,qic->i", q.weights, phi, phi))
    assert np.all(np.abs(inner) <= 1e-10 * fn * pn)
