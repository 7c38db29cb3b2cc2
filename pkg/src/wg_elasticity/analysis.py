"""Error norms against exact solutions, convergence rates and self-convergence."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .assembly import Discretization, WGField
from .basis import EdgeBasis, ElementBasis, canonical_tangent, edge_basis_values, mass_matrix
from .cases import ManufacturedCase, NoExactSolution
from .mesh import point_in_polygon
from .quadrature import quad_edge, quad_polygon
from .weak_ops import local_dofs_of_polynomial


@dataclass
class ErrorReport:
    level: int
    h: float
    n_free: int
    err_L2: float | None = None
    err_energy: float | None = None
    rate_L2: float | None = None
    rate_energy: float | None = None
    diff_energy: float | None = None  # successive difference to the previous level
    rate_diff: float | None = None
    r: int | None = None  # weak-operator degree actually used


def _require_exact(case: ManufacturedCase) -> None:
    if not case.has_exact:
        raise NoExactSolution(f"case {case.name!r} has no exact solution")


def error_vector(u_h: WGField, case: ManufacturedCase) -> np.ndarray:
    """Full-layout coefficients of ``Q_h u - u_h``."""
    _require_exact(case)
    return u_h.disc.interpolate(case) - u_h.coeffs


def error_L2(u_h: WGField, case: ManufacturedCase) -> float:
    """``||Q_0 u - u_0||`` summed over cells."""
    d = error_vector(u_h, case)
    disc = u_h.disc
    ni = disc.dofmap.n_interior
    total = 0.0
    for g, cells in enumerate(disc.groups):
        M = disc.elements[g].interior_mass
        dc = d[(cells[:, None] * ni + np.arange(ni))]
        total += float(np.einsum("ni,ij,nj->", dc, M, dc))
    return math.sqrt(max(total, 0.0))


def energy_norm(disc: Discretization, coeffs, d: np.ndarray) -> float:
    """``(a(d, d) + s(d, d))^{1/2}`` via the assembled full matrix."""
    K = disc.full_matrix(coeffs, stabilizer=True)
    return math.sqrt(max(float(d @ (K @ d)), 0.0))


def error_energy(u_h: WGField, case: ManufacturedCase) -> float:
    """``|||Q_h u - u_h|||``; the stabilizer term is always part of the norm."""
    return energy_norm(u_h.disc, case.coeffs, error_vector(u_h, case))


def energy_norm_direct(disc: Discretization, coeffs, d: np.ndarray) -> float:
    """Same norm as :func:`energy_norm` by evaluating the weak strain, weak
    divergence and edge jumps at quadrature points cell by cell."""
    mesh = disc.mesh
    total = 0.0
    for c in range(mesh.n_cells):
        el = disc.element(c)
        loc = d[disc.dofmap.cell_dofs(c)]
        sub = mesh.cell_subdomain[c]
        mu, lam = float(coeffs.mu_sub(sub)), float(coeffs.lam_sub(sub))
        pr = ElementBasis(np.zeros(2), el.h, el.r)
        vals = pr.values(el.cell_rule.points)
        nr = pr.dim
        eps = (el.E @ loc).reshape(3, nr) @ vals.T  # xx, yy, xy at points
        div = vals @ (el.D @ loc)
        w = el.cell_rule.weights
        frob = eps[0] ** 2 + eps[1] ** 2 + 2 * eps[2] ** 2
        total += float(w @ (2 * mu * frob + lam * div**2))
        pk = ElementBasis(np.zeros(2), el.h, el.k)
        for j, ed in enumerate(el.edges):
            rule = quad_edge(ed.start, ed.end, 2 * el.k + 2)
            ev = edge_basis_values(rule.points - 0.5 * (ed.start + ed.end), ed.length,
                                   canonical_tangent(ed.start, ed.end), el.k, el.trace_degree)
            trace = np.einsum("qic,i->qc", pk.vector_values(rule.points), loc[:el.n_interior])
            Me = mass_matrix(ev, rule.weights)
            qb = np.linalg.solve(Me, np.einsum("q,qic,qc->i", rule.weights, ev, trace))
            jump = np.einsum("qic,i->qc", ev, qb - loc[el.edge_slice(j)])
            total += float(rule.weights @ np.sum(jump**2, axis=-1)) / el.h
    return math.sqrt(max(total, 0.0))


def convergence_rates(errors) -> list[float | None]:
    """``log2(e_{l-1} / e_l)`` for consecutive entries; ``None`` where undefined."""
    out = []
    for a, b in zip(errors[:-1], errors[1:]):
        if a is None or b is None or not (a > 0 and b > 0) or not (math.isfinite(a) and math.isfinite(b)):
            out.append(None)
        else:
            out.append(math.log2(a / b))
    return out


# -- self-convergence -----------------------------------------------------

def _locate_cells(coarse, fine) -> np.ndarray:
    """Coarse cell containing each fine cell centroid."""
    owner = np.full(fine.n_cells, -1, dtype=np.int64)
    pts = fine.cell_centroid
    for C in range(coarse.n_cells):
        V = coarse.cell_vertices(C)
        lo, hi = V.min(axis=0) - 1e-12, V.max(axis=0) + 1e-12
        cand = np.flatnonzero(np.all((pts >= lo) & (pts <= hi), axis=1) & (owner < 0))
        if len(cand):
            inside = point_in_polygon(pts[cand], V)
            owner[cand[inside]] = C
    return owner


def _on_segment(p, a, b, tol=1e-10) -> bool:
    d = b - a
    L2 = float(d @ d)
    t = float((p - a) @ d) / L2
    if t < -tol or t > 1 + tol:
        return False
    return float(np.hypot(*(a + t * d - p))) <= tol * math.sqrt(L2) + 1e-13


def prolongate(u_coarse: WGField, fine_disc: Discretization) -> np.ndarray:
    """Represent a coarse weak function on a nested fine discretization.

    Cell values are re-expanded exactly; a fine edge lying on a coarse edge
    takes the coarse edge value, any other fine edge takes ``Q_b`` of the coarse
    interior polynomial.
    """
    cd, fd = u_coarse.disc, fine_disc
    if cd.k != fd.k or cd.trace_degree != fd.trace_degree:
        raise ValueError("coarse and fine fields use different polynomial spaces")
    cm, fm = cd.mesh, fd.mesh
    owner = _locate_cells(cm, fm)
    if np.any(owner < 0) or np.any(cm.cell_subdomain[owner] != fm.cell_subdomain):
        raise ValueError("meshes are not nested")
    covered = np.bincount(owner, weights=fm.cell_area, minlength=cm.n_cells)
    if np.abs(covered - cm.cell_area).max() > 1e-12:
        raise ValueError("meshes are not nested: fine cells do not tile the coarse cells")
    cdm, fdm = cd.dofmap, fd.dofmap
    out = np.zeros(fdm.n_full)
    done = np.zeros(fdm.n_blocks, dtype=bool)
    k = fd.k
    for c in range(fm.n_cells):
        C = int(owner[c])
        el = fd.element(c)
        center = fm.cell_centroid[c]
        cbasis = ElementBasis(cm.cell_centroid[C], cd.element(C).h, k)
        ccoef = u_coarse.interior(C)

        def coarse_u0(p, cbasis=cbasis, ccoef=ccoef):
            return cbasis.evaluate(ccoef, p)

        loc = local_dofs_of_polynomial(el, coarse_u0, center)
        out[fdm.interior_dofs(c)] = loc[:el.n_interior]
        CV = cm.cell_vertices(C)
        m = len(CV)
        for j, e in enumerate(fm.cell_edges[c]):
            b = int(fdm.cell_blocks[c][j])
            if done[b]:
                continue
            done[b] = True
            p0, p1 = fm.vertices[fm.edges[e]]
            val = loc[el.edge_slice(j)]
            for J in range(m):
                a_, b_ = CV[J], CV[(J + 1) % m]
                if _on_segment(p0, a_, b_) and _on_segment(p1, a_, b_):
                    E = cm.cell_edges[C][J]
                    cb = int(cdm.cell_blocks[C][J])
                    cvals = u_coarse.coeffs[cdm.block_dofs(cb)]
                    cp0, cp1 = cm.vertices[cm.edges[E]]
                    ceb = EdgeBasis(cp0, cp1, k, cd.trace_degree)
                    feb = EdgeBasis(p0, p1, k, fd.trace_degree)
                    rule = quad_edge(p0, p1, 2 * k + 2)
                    fv = feb.values(rule.points)
                    g = np.einsum("qic,i->qc", ceb.values(rule.points), cvals)
                    val = np.linalg.solve(mass_matrix(fv, rule.weights),
                                          np.einsum("q,qic,qc->i", rule.weights, fv, g))
                    break
            out[fdm.block_dofs(b)] = val
    return out


def successive_difference(u_coarse: WGField, u_fine: WGField) -> float:
    """Energy norm on the fine mesh of ``u_fine`` minus the prolonged coarse field."""
    if u_coarse.k != u_fine.k:
        raise ValueError(f"polynomial degrees differ: {u_coarse.k} vs {u_fine.k}")
    if u_fine.lame is None:
        raise ValueError("fine field does not record its Lame coefficients")
    d = u_fine.coeffs - prolongate(u_coarse, u_fine.disc)
    return energy_norm(u_fine.disc, u_fine.lame, d)


# -- error equation -----------------------------------------------------------

def error_equation_terms(u_h: WGField, case: ManufacturedCase, v: np.ndarray) -> tuple[float, float]:
    """Both sides of the error equation for a test function ``v`` (full layout, in W_h^0).

    Left: ``a(e_h, v) + s(e_h, v)`` with ``e_h = Q_h u - u_h``.  Right:
    ``s(Q_h u, v) - sum_T <v_0 - v_b, 2 mu (Pi eps(u) - eps(u)) n + lam (Pi div u - div u) n>``
    where ``Pi`` projects onto ``P_{k-1}``.
    """
    _require_exact(case)
    disc = u_h.disc
    mesh = disc.mesh
    dm = disc.dofmap
    qu = disc.interpolate(case)
    K = disc.full_matrix(case.coeffs, stabilizer=disc.options.stabilizer)
    lhs = float(v @ (K @ (qu - u_h.coeffs)))

    k = disc.k
    r = k - 1
    deg = disc.data_degree
    rhs = 0.0
    for c in range(mesh.n_cells):
        el = disc.element(c)
        idx = dm.cell_dofs(c)
        vl, ql = v[idx], qu[idx]
        if disc.options.stabilizer:
            rhs += float(vl @ (el.S @ ql))
        sub = int(mesh.cell_subdomain[c])
        mu, lam = float(case.coeffs.mu_sub(sub)), float(case.coeffs.lam_sub(sub))
        center = mesh.cell_centroid[c]
        pr = ElementBasis(np.zeros(2), el.h, r)
        rule = quad_polygon(el.vertices, deg, center=np.zeros(2))
        pv = pr.values(rule.points)
        Mr = mass_matrix(pv, rule.weights)
        eps = case.strain(rule.points + center, sub)
        div = case.divergence(rule.points + center, sub)
        proj_eps = {(a, b): np.linalg.solve(Mr, pv.T @ (rule.weights * eps[:, a, b]))
                    for a in range(2) for b in range(2)}
        proj_div = np.linalg.solve(Mr, pv.T @ (rule.weights * div))
        pk = ElementBasis(np.zeros(2), el.h, k)
        for j, ed in enumerate(el.edges):
            erule = quad_edge(ed.start, ed.end, deg)
            x = erule.points
            pe = pr.values(x)
            eps_e = case.strain(x + center, sub)
            div_e = case.divergence(x + center, sub)
            peps = np.empty_like(eps_e)
            for (a, b), cf in proj_eps.items():
                peps[:, a, b] = pe @ cf
            pdiv = pe @ proj_div
            n = ed.normal
            flux = (2 * mu * np.einsum("qab,b->qa", peps - eps_e, n)
                    + lam * (pdiv - div_e)[:, None] * n)
            v0 = np.einsum("qic,i->qc", pk.vector_values(x), vl[:el.n_interior])
            eb = edge_basis_values(x - 0.5 * (ed.start + ed.end), ed.length,
                                   canonical_tangent(ed.start, ed.end), k, el.trace_degree)
            vb = np.einsum("qic,i->qc", eb, vl[el.edge_slice(j)])
            rhs -= float(erule.weights @ np.sum((v0 - vb) * flux, axis=-1))
    return lhs, rhs


def random_test_function(disc: Discretization, rng: np.random.Generator) -> np.ndarray:
    """Random element of W_h^0 in the full layout (zero on the boundary, single valued on the interface)."""
    dm = disc.dofmap
    return dm.prolongation() @ rng.standard_normal(dm.n_free)


def mean_displacement(u_h: WGField) -> np.ndarray:
    """Area average of ``u_0`` over the domain."""
    mesh = u_h.disc.mesh
    total, area = np.zeros(2), 0.0
    for c in range(mesh.n_cells):
        el = u_h.disc.element(c)
        pts = el.cell_rule.points + mesh.cell_centroid[c]
        total += el.cell_rule.weights @ u_h.evaluate_interior(c, pts)
        area += el.area
    return total / area
