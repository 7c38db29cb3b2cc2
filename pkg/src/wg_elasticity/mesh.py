"""Polygonal meshes of the unit square aligned with the square inclusion.

Cells are counterclockwise vertex loops; the edge table and all geometric
quantities are derived deterministically from ``vertices`` and ``cells``.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

INTERIOR, BOUNDARY, INTERFACE = 0, 1, 2
EDGE_KIND_NAMES = {INTERIOR: "interior", BOUNDARY: "boundary", INTERFACE: "interface"}

# inclusion (1/4, 3/4)^2
INCLUSION_LO, INCLUSION_HI = 0.25, 0.75
_TOL = 1e-12


class MeshError(ValueError):
    pass


def polygon_area(pts: np.ndarray) -> float:
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def polygon_centroid(pts: np.ndarray) -> np.ndarray:
    x, y = pts[:, 0], pts[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * cross.sum()
    cx = ((x + xn) * cross).sum() / (6 * area)
    cy = ((y + yn) * cross).sum() / (6 * area)
    return np.array([cx, cy])


def polygon_diameter(pts: np.ndarray) -> float:
    d = pts[:, None, :] - pts[None, :, :]
    return float(np.sqrt((d**2).sum(-1)).max())


@dataclass(frozen=True)
class PolyMesh:
    """Polygonal partition of (0,1)^2.

    ``edges[e] = (a, b)`` is oriented counterclockwise with respect to
    ``edge_cells[e, 0]`` (the cell on its left); ``edge_cells[e, 1]`` is the
    neighbour or -1 on the domain boundary.  ``cell_edges[c][j]`` is the edge
    running from ``cells[c][j]`` to ``cells[c][j + 1]``.
    """

    vertices: np.ndarray
    cells: tuple[np.ndarray, ...]
    cell_subdomain: np.ndarray
    edge_kind: np.ndarray
    edge_piece: np.ndarray
    edges: np.ndarray = field(repr=False)
    edge_cells: np.ndarray = field(repr=False)
    cell_edges: tuple[np.ndarray, ...] = field(repr=False)
    cell_area: np.ndarray = field(repr=False)
    cell_centroid: np.ndarray = field(repr=False)
    cell_diameter: np.ndarray = field(repr=False)

    @classmethod
    def from_cells(cls, vertices, cells, cell_subdomain=None) -> "PolyMesh":
        vertices = np.asarray(vertices, dtype=float)
        cells = tuple(np.asarray(c, dtype=np.int64) for c in cells)
        nc = len(cells)
        if cell_subdomain is None:
            cell_subdomain = np.ones(nc, dtype=np.int64)

        edge_index: dict[tuple[int, int], int] = {}
        edges, owners = [], []
        cell_edges = []
        for c, loop in enumerate(cells):
            ce = np.empty(len(loop), dtype=np.int64)
            for j, a in enumerate(loop):
                b = loop[(j + 1) % len(loop)]
                key = (min(a, b), max(a, b))
                e = edge_index.get(key)
                if e is None:
                    e = len(edges)
                    edge_index[key] = e
                    edges.append((a, b))
                    owners.append([c, -1])
                elif owners[e][1] == -1 and owners[e][0] != c:
                    owners[e][1] = c
                else:
                    raise MeshError(f"edge {key} shared by more than two cells")
                ce[j] = e
            cell_edges.append(ce)

        edges = np.array(edges, dtype=np.int64).reshape(-1, 2)
        edge_cells = np.array(owners, dtype=np.int64).reshape(-1, 2)
        kind = np.where(edge_cells[:, 1] < 0, BOUNDARY, INTERIOR).astype(np.int64)

        pts = [vertices[c] for c in cells]
        return cls(
            vertices=vertices,
            cells=cells,
            cell_subdomain=np.asarray(cell_subdomain, dtype=np.int64),
            edge_kind=kind,
            edge_piece=np.full(len(edges), -1, dtype=np.int64),
            edges=edges,
            edge_cells=edge_cells,
            cell_edges=tuple(cell_edges),
            cell_area=np.array([polygon_area(p) for p in pts]),
            cell_centroid=np.array([polygon_centroid(p) for p in pts]).reshape(-1, 2),
            cell_diameter=np.array([polygon_diameter(p) for p in pts]),
        )

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def h(self) -> float:
        return float(self.cell_diameter.max())

    def cell_vertices(self, c: int) -> np.ndarray:
        return self.vertices[self.cells[c]]

    def edge_count(self, kind: int) -> int:
        return int((self.edge_kind == kind).sum())


def _grid_mesh(n: int, midpoints: bool) -> PolyMesh:
    if n < 1:
        raise MeshError(f"need at least one cell per side, got n={n}")
    step = 2 if midpoints else 1
    m = step * n + 1
    index = -np.ones((m, m), dtype=np.int64)
    verts = []
    for j in range(m):
        for i in range(m):
            if midpoints and i % 2 == 1 and j % 2 == 1:
                continue
            index[i, j] = len(verts)
            verts.append((i / (m - 1), j / (m - 1)))

    cells = []
    for cj in range(n):
        for ci in range(n):
            i0, j0 = step * ci, step * cj
            if midpoints:
                loop = [(i0, j0), (i0 + 1, j0), (i0 + 2, j0), (i0 + 2, j0 + 1),
                        (i0 + 2, j0 + 2), (i0 + 1, j0 + 2), (i0, j0 + 2), (i0, j0 + 1)]
            else:
                loop = [(i0, j0), (i0 + 1, j0), (i0 + 1, j0 + 1), (i0, j0 + 1)]
            cells.append([index[i, j] for i, j in loop])
    return PolyMesh.from_cells(np.array(verts), cells)


def gen_rect_mesh(n: int, tag: bool = False) -> PolyMesh:
    """Uniform ``n x n`` square grid on (0,1)^2 (level l uses n = 2**(l-1))."""
    mesh = _grid_mesh(n, midpoints=False)
    return tag_interface(mesh) if tag else mesh


def gen_polygon_mesh(n: int, tag: bool = False) -> PolyMesh:
    """Square grid with every edge split at its midpoint.

    Each cell is a degenerate octagon with collinear vertex triples, which
    exercises polygon code paths (eight edges per cell) while staying aligned
    with the inclusion whenever ``n % 4 == 0``.
    """
    mesh = _grid_mesh(n, midpoints=True)
    return tag_interface(mesh) if tag else mesh


def mesh_for_level(family: str, level: int) -> PolyMesh:
    n = 2 ** (level - 1)
    if family == "rect":
        return gen_rect_mesh(n, tag=True)
    if family in ("octagon", "polygon"):
        return gen_polygon_mesh(n, tag=True)
    raise MeshError(f"unknown mesh family {family!r}")


def _strictly_inside(p: np.ndarray) -> np.ndarray:
    return np.all((p > INCLUSION_LO + _TOL) & (p < INCLUSION_HI - _TOL), axis=-1)


def _strictly_outside(p: np.ndarray) -> np.ndarray:
    return np.any((p < INCLUSION_LO - _TOL) | (p > INCLUSION_HI + _TOL), axis=-1)


def point_in_polygon(pts: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Even-odd ray casting; points exactly on an edge may go either way."""
    pts = np.atleast_2d(pts)
    x, y = pts[:, 0], pts[:, 1]
    inside = np.zeros(len(pts), dtype=bool)
    m = len(poly)
    for i in range(m):
        (x0, y0), (x1, y1) = poly[i], poly[(i + 1) % m]
        if y0 == y1:
            continue
        crosses = (y0 > y) != (y1 > y)
        xc = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
        inside ^= crosses & (x < xc)
    return inside


def _gamma_piece(a: np.ndarray, b: np.ndarray) -> int:
    """Index of the inclusion side containing segment ab: 0 bottom, 1 right, 2 top, 3 left."""
    for piece, (axis, val) in enumerate([(1, INCLUSION_LO), (0, INCLUSION_HI),
                                         (1, INCLUSION_HI), (0, INCLUSION_LO)]):
        if abs(a[axis] - val) < _TOL and abs(b[axis] - val) < _TOL:
            return piece
    return -1


def tag_interface(mesh: PolyMesh) -> PolyMesh:
    """Label cells by subdomain (2 inside the inclusion) and classify edges.

    A cell belongs to subdomain 2 when all its vertices lie in the closed
    inclusion and at least one lies strictly inside; otherwise it belongs to
    subdomain 1.  Raises :class:`MeshError` when a cell has vertices strictly
    on both sides of the interface, i.e. the mesh does not resolve it.
    """
    sub = np.ones(mesh.n_cells, dtype=np.int64)
    for c in range(mesh.n_cells):
        p = mesh.cell_vertices(c)
        inside, outside = _strictly_inside(p), _strictly_outside(p)
        if inside.any() and outside.any():
            raise MeshError(
                f"cell {c} with centroid {mesh.cell_centroid[c]} crosses the interface; "
                "mesh is not aligned with the inclusion (n must be divisible by 4)"
            )
        if inside.any() or (not outside.any() and _strictly_inside(mesh.cell_centroid[c])):
            sub[c] = 2

    return with_subdomains(mesh, sub)


def with_subdomains(mesh: PolyMesh, sub) -> PolyMesh:
    """Attach subdomain labels and classify edges; interface edges must lie on the inclusion boundary."""
    sub = np.asarray(sub, dtype=np.int64)
    kind = np.where(mesh.edge_cells[:, 1] < 0, BOUNDARY, INTERIOR).astype(np.int64)
    piece = np.full(mesh.n_edges, -1, dtype=np.int64)
    for e, (a, b) in enumerate(mesh.edges):
        left, right = mesh.edge_cells[e]
        if right < 0 or sub[left] == sub[right]:
            continue
        m = _gamma_piece(mesh.vertices[a], mesh.vertices[b])
        if m < 0:
            raise MeshError(f"edge {e} separates subdomains but does not lie on the interface")
        kind[e] = INTERFACE
        piece[e] = m
    return dataclasses.replace(mesh, cell_subdomain=sub, edge_kind=kind, edge_piece=piece)


@dataclass
class ValidationReport:
    area_sum: float
    diameter_ratio: float
    orientation_ok: bool
    manifold_ok: bool
    interface_ok: bool
    failures: list[str]

    @property
    def passed(self) -> bool:
        return not self.failures


def validate(mesh: PolyMesh) -> ValidationReport:
    failures = []
    area = float(mesh.cell_area.sum())
    if abs(area - 1.0) > 1e-12:
        failures.append(f"area: cells cover {area!r}, expected 1")
    orientation_ok = bool(np.all(mesh.cell_area > 0))
    if not orientation_ok:
        bad = np.flatnonzero(mesh.cell_area <= 0)
        failures.append(f"orientation: cells {bad.tolist()} are clockwise or degenerate")

    manifold_ok = True
    uses = np.zeros(mesh.n_edges, dtype=np.int64)
    for ce in mesh.cell_edges:
        np.add.at(uses, ce, 1)
    boundary = mesh.edge_cells[:, 1] < 0
    if np.any(uses != np.where(boundary, 1, 2)):
        manifold_ok = False
        failures.append("manifold: edge use counts inconsistent with adjacency")
    mid = 0.5 * (mesh.vertices[mesh.edges[:, 0]] + mesh.vertices[mesh.edges[:, 1]])
    on_dom = np.any((np.abs(mid) < _TOL) | (np.abs(mid - 1) < _TOL), axis=1)
    if np.any(on_dom != boundary):
        manifold_ok = False
        failures.append("manifold: boundary edges do not match the unit square boundary")

    interface_ok = True
    for c in range(mesh.n_cells):
        p = mesh.cell_vertices(c)
        if _strictly_inside(p).any() and _strictly_outside(p).any():
            interface_ok = False
            failures.append(f"interface: cell {c} crosses the inclusion boundary")
            break
    iface = mesh.edge_kind == INTERFACE
    if np.any(iface & boundary):
        interface_ok = False
        failures.append("interface: interface edge on the domain boundary")
    for e in np.flatnonzero(iface):
        l, r = mesh.edge_cells[e]
        if mesh.cell_subdomain[l] == mesh.cell_subdomain[r]:
            interface_ok = False
            failures.append(f"interface: edge {e} does not separate subdomains")
            break

    ratio = float(mesh.cell_diameter.max() / mesh.cell_diameter.min())
    return ValidationReport(area, ratio, orientation_ok, manifold_ok, interface_ok, failures)


def write_mesh(mesh: PolyMesh, path) -> None:
    """Plain text: ``npoints ncells``, coordinates, vertex loops, subdomain labels."""
    lines = [f"{len(mesh.vertices)} {mesh.n_cells}"]
    lines += [f"{x:.17g} {y:.17g}" for x, y in mesh.vertices]
    lines += [" ".join(str(int(v)) for v in loop) for loop in mesh.cells]
    lines += [str(int(s)) for s in mesh.cell_subdomain]
    Path(path).write_text("\n".join(lines) + "\n")


def read_mesh(path) -> PolyMesh:
    rows = [ln.split() for ln in Path(path).read_text().splitlines() if ln.strip()]
    npts, ncells = int(rows[0][0]), int(rows[0][1])
    verts = np.array([[float(a), float(b)] for a, b in rows[1:1 + npts]])
    cells = [[int(v) for v in r] for r in rows[1 + npts:1 + npts + ncells]]
    sub = [int(r[0]) for r in rows[1 + npts + ncells:1 + npts + 2 * ncells]]
    mesh = PolyMesh.from_cells(verts, cells)
    return with_subdomains(mesh, sub) if sub else tag_interface(mesh)
