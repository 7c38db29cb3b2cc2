"""Lamé coefficient fields and manufactured test problems on the unit square.

All evaluators take points ``p`` of shape ``(..., 2)`` and a subdomain label
``sub`` (scalar or broadcastable integer array; 1 outside, 2 inside the
inclusion) so that two-sided traces on the interface are unambiguous.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from numpy.polynomial import polynomial as npoly

from .mesh import INCLUSION_HI, INCLUSION_LO


class NoExactSolution(ValueError):
    pass


@dataclass(frozen=True)
class CoefficientField:
    """``mu = mu0 / 2`` inside the inclusion and ``1/2`` outside; ``lambda = lambda0 * mu``."""

    mu0: float = 1.0
    lambda0: float = 1.0

    def __post_init__(self):
        if self.mu0 <= 0 or self.lambda0 <= 0:
            raise ValueError("mu0 and lambda0 must be positive")

    def mu_sub(self, sub) -> np.ndarray:
        return np.where(np.asarray(sub) == 2, 0.5 * self.mu0, 0.5)

    def lam_sub(self, sub) -> np.ndarray:
        return self.lambda0 * self.mu_sub(sub)

    def subdomain_of(self, p) -> np.ndarray:
        p = np.asarray(p)
        inside = np.all((p > INCLUSION_LO) & (p < INCLUSION_HI), axis=-1)
        return np.where(inside, 2, 1)

    def mu(self, p) -> np.ndarray:
        return self.mu_sub(self.subdomain_of(p))

    def lam(self, p) -> np.ndarray:
        return self.lam_sub(self.subdomain_of(p))


def _pair(a, b):
    return np.stack([a, b], axis=-1)


def _mat(a11, a12, a21, a22):
    return np.stack([np.stack([a11, a12], -1), np.stack([a21, a22], -1)], -2)


@dataclass
class ManufacturedCase:
    """Displacement, derived stress and problem data for one test problem.

    ``u``, ``grad`` (rows are components) and ``f`` take ``(p, sub)``.  Interface
    data follow the lower-label-minus-higher-label convention:
    ``phi = u_1 - u_2`` and ``psi = sigma(u_1) n_1 + sigma(u_2) n_2`` with ``n_1``
    the unit normal pointing out of subdomain 1.
    """

    name: str
    coeffs: CoefficientField
    has_exact: bool
    _u: Callable | None
    _grad: Callable | None
    _f: Callable
    _g: Callable | None = None

    def u(self, p, sub) -> np.ndarray:
        if not self.has_exact:
            raise NoExactSolution(f"case {self.name!r} has no exact solution")
        return self._u(np.asarray(p, float), np.asarray(sub))

    def grad(self, p, sub) -> np.ndarray:
        if not self.has_exact:
            raise NoExactSolution(f"case {self.name!r} has no exact solution")
        return self._grad(np.asarray(p, float), np.asarray(sub))

    def strain(self, p, sub) -> np.ndarray:
        g = self.grad(p, sub)
        return 0.5 * (g + np.swapaxes(g, -1, -2))

    def divergence(self, p, sub) -> np.ndarray:
        g = self.grad(p, sub)
        return g[..., 0, 0] + g[..., 1, 1]

    def stress(self, p, sub) -> np.ndarray:
        mu = self.coeffs.mu_sub(sub)[..., None, None]
        lam = self.coeffs.lam_sub(sub)[..., None, None]
        return 2 * mu * self.strain(p, sub) + lam * self.divergence(p, sub)[..., None, None] * np.eye(2)

    def f(self, p, sub) -> np.ndarray:
        p = np.asarray(p, float)
        return np.broadcast_to(self._f(p, np.asarray(sub)), p.shape).copy()

    def g(self, p, sub=1) -> np.ndarray:
        if self._g is not None:
            return self._g(np.asarray(p, float))
        return self.u(p, sub)

    def phi(self, p) -> np.ndarray:
        if not self.has_exact:
            return np.zeros(np.shape(p))
        return self.u(p, 1) - self.u(p, 2)

    def psi(self, p, n1) -> np.ndarray:
        """Traction jump; ``n1`` points out of subdomain 1 (into the inclusion)."""
        if not self.has_exact:
            return np.zeros(np.shape(p))
        n1 = np.broadcast_to(np.asarray(n1, float), np.shape(p))
        jump = self.stress(p, 1) - self.stress(p, 2)
        return np.einsum("...ij,...j->...i", jump, n1)


def _scaled_case(name, coeffs, w, dw, d2w) -> ManufacturedCase:
    """Case with ``u = w / mu``.

    Because ``lambda / mu`` is constant, ``sigma(u) = 2 eps(w) + lambda0 div(w) I``
    on both sides, so ``f = -lap(w) - (1 + lambda0) grad(div w)``.
    ``d2w(p)`` returns second derivatives with shape ``(..., 2, 2, 2)``
    indexed (component, d_i, d_j).
    """

    def u(p, sub):
        return w(p) / coeffs.mu_sub(sub)[..., None]

    def grad(p, sub):
        return dw(p) / coeffs.mu_sub(sub)[..., None, None]

    def f(p, sub):
        H = d2w(p)
        lap = H[..., 0, 0] + H[..., 1, 1]
        grad_div = H[..., 0, 0, :] + H[..., 1, 1, :]  # d_i (d_x w_x + d_y w_y)
        return -lap - (1 + coeffs.lambda0) * grad_div

    return ManufacturedCase(name, coeffs, True, u, grad, f)


def case_example1(coeffs: CoefficientField) -> ManufacturedCase:
    """``u = mu^{-1} (-s, s)``, ``s = sin(pi x) cos(2 pi x) sin(pi y) cos(2 pi y)``."""
    pi = np.pi

    def a(t):
        return np.sin(pi * t) * np.cos(2 * pi * t)

    def da(t):
        return pi * np.cos(pi * t) * np.cos(2 * pi * t) - 2 * pi * np.sin(pi * t) * np.sin(2 * pi * t)

    def d2a(t):
        return (-5 * pi**2 * np.sin(pi * t) * np.cos(2 * pi * t)
                - 4 * pi**2 * np.cos(pi * t) * np.sin(2 * pi * t))

    def parts(p):
        x, y = p[..., 0], p[..., 1]
        return a(x), da(x), d2a(x), a(y), da(y), d2a(y)

    def w(p):
        ax, _, _, ay, _, _ = parts(p)
        s = ax * ay
        return _pair(-s, s)

    def dw(p):
        ax, dax, _, ay, day, _ = parts(p)
        sx, sy = dax * ay, ax * day
        return _mat(-sx, -sy, sx, sy)

    def d2w(p):
        ax, dax, d2ax, ay, day, d2ay = parts(p)
        hs = _mat(d2ax * ay, dax * day, dax * day, ax * d2ay)
        return np.stack([-hs, hs], axis=-3)

    return _scaled_case("example1", coeffs, w, dw, d2w)


def case_example2(coeffs: CoefficientField) -> ManufacturedCase:
    """``u = mu^{-1} (-y, x) (4y-1)(4y-3)(4x-1)(4x-3)``, piecewise P5."""

    def A(t):
        return (4 * t - 1) * (4 * t - 3)

    def dA(t):
        return 32 * t - 16

    def parts(p):
        x, y = p[..., 0], p[..., 1]
        return x, y, A(x), dA(x), A(y), dA(y)

    def w(p):
        x, y, Ax, _, Ay, _ = parts(p)
        q = Ax * Ay
        return _pair(-y * q, x * q)

    def dw(p):
        x, y, Ax, dAx, Ay, dAy = parts(p)
        q, qx, qy = Ax * Ay, dAx * Ay, Ax * dAy
        return _mat(-y * qx, -(q + y * qy), q + x * qx, x * qy)

    def d2w(p):
        x, y, Ax, dAx, Ay, dAy = parts(p)
        q = Ax * Ay
        qx, qy = dAx * Ay, Ax * dAy
        qxx, qxy, qyy = 32 * Ay, dAx * dAy, 32 * Ax
        h1 = _mat(-y * qxx, -(qx + y * qxy), -(qx + y * qxy), -(2 * qy + y * qyy))
        h2 = _mat(2 * qx + x * qxx, qy + x * qxy, qy + x * qxy, x * qyy)
        return np.stack([h1, h2], axis=-3)

    return _scaled_case("example2", coeffs, w, dw, d2w)


def case_example3(coeffs: CoefficientField) -> ManufacturedCase:
    """Unit upward load ``f = (0, 1)`` with homogeneous data and no known solution."""

    def f(p, sub):
        out = np.zeros(np.shape(p))
        out[..., 1] = 1.0
        return out

    return ManufacturedCase("example3", coeffs, False, None, None, f, _g=lambda p: np.zeros(np.shape(p)))


def case_polynomial(coeffs: CoefficientField, cx, cy, name: str = "polynomial") -> ManufacturedCase:
    """Globally continuous polynomial displacement ``u = (sum cx[i,j] x^i y^j, ...)``.

    With jumping coefficients the traction jump ``psi`` and the per-subdomain
    load are generally nonzero, while ``phi = 0``.
    """
    cx, cy = np.atleast_2d(np.asarray(cx, float)), np.atleast_2d(np.asarray(cy, float))
    c = [cx, cy]
    d1 = [[npoly.polyder(ci, axis=a) for a in (0, 1)] for ci in c]
    d2 = [[[npoly.polyder(dij, axis=b) for b in (0, 1)] for dij in di] for di in d1]

    def ev(coef, p):
        return npoly.polyval2d(p[..., 0], p[..., 1], coef)

    def u(p, sub):
        return _pair(ev(cx, p), ev(cy, p))

    def grad(p, sub):
        return _mat(ev(d1[0][0], p), ev(d1[0][1], p), ev(d1[1][0], p), ev(d1[1][1], p))

    def f(p, sub):
        mu = coeffs.mu_sub(sub)
        lam = coeffs.lam_sub(sub)
        out = []
        for i in range(2):
            lap = ev(d2[i][0][0], p) + ev(d2[i][1][1], p)
            gdiv = ev(d2[0][0][i], p) + ev(d2[1][1][i], p)
            out.append(-mu * lap - (mu + lam) * gdiv)
        return _pair(*out)

    return ManufacturedCase(name, coeffs, True, u, grad, f)


def case_rigid_motion(coeffs: CoefficientField, a=(0.3, -0.2), omega: float = 1.0) -> ManufacturedCase:
    """``u = a + omega (-y, x)``: zero strain, zero load."""
    cx = np.array([[a[0], -omega], [0.0, 0.0]])
    cy = np.array([[a[1], 0.0], [omega, 0.0]])
    return case_polynomial(coeffs, cx, cy, name="rigid")


CASES = {"example1": case_example1, "example2": case_example2, "example3": case_example3}


def make_case(name: str, coeffs: CoefficientField) -> ManufacturedCase:
    try:
        return CASES[name](coeffs)
    except KeyError:
        raise ValueError(f"unknown case {name!r}; choose from {sorted(CASES)}") from None
