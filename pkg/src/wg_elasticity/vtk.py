"""Legacy ASCII VTK export of the interior field ``u_0``.

Each cell is split into a fan of triangles around its centroid; ``u_0`` of
that cell is sampled at the fan vertices, so points are not shared between
cells and the piecewise field is shown without smoothing.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .assembly import WGField

VTK_TRIANGLE = 5


def field_triangulation(u_h: WGField):
    """Points ``(n, 2)``, triangles ``(m, 3)`` and ``u_0`` values ``(n, 2)``."""
    mesh = u_h.disc.mesh
    pts, tris, vals = [], [], []
    base = 0
    for c in range(mesh.n_cells):
        V = mesh.cell_vertices(c)
        P = np.vstack([mesh.cell_centroid[c], V])
        m = len(V)
        pts.append(P)
        vals.append(u_h.evaluate_interior(c, P))
        i = np.arange(m)
        tris.append(base + np.column_stack([np.zeros(m, dtype=np.int64), 1 + i, 1 + (i + 1) % m]))
        base += m + 1
    return np.concatenate(pts), np.concatenate(tris), np.concatenate(vals)


def export_vtk(u_h: WGField, path, title: str = "weak Galerkin displacement") -> None:
    P, T, U = field_triangulation(u_h)
    lines = ["# vtk DataFile Version 3.0", title[:255], "ASCII", "DATASET UNSTRUCTURED_GRID",
             f"POINTS {len(P)} double"]
    lines += [f"{x:.17g} {y:.17g} 0" for x, y in P]
    lines.append(f"CELLS {len(T)} {4 * len(T)}")
    lines += [f"3 {a} {b} {c}" for a, b, c in T]
    lines.append(f"CELL_TYPES {len(T)}")
    lines += [str(VTK_TRIANGLE)] * len(T)
    lines.append(f"POINT_DATA {len(P)}")
    for name, col in (("u_x", 0), ("u_y", 1)):
        lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        lines += [f"{v:.17g}" for v in U[:, col]]
    lines.append("VECTORS u double")
    lines += [f"{a:.17g} {b:.17g} 0" for a, b in U]
    Path(path).write_text("\n".join(lines) + "\n")


def read_vtk(path) -> dict:
    """Minimal reader for files written by :func:`export_vtk`."""
    tokens = Path(path).read_text().split("\n")
    if not tokens[0].startswith("# vtk DataFile"):
        raise ValueError("not a legacy VTK file")
    if tokens[2].strip() != "ASCII" or tokens[3].strip() != "DATASET UNSTRUCTURED_GRID":
        raise ValueError("only ASCII unstructured grids are supported")
    words = " ".join(tokens[4:]).split()
    pos = 0

    def take(n):
        nonlocal pos
        out = words[pos:pos + n]
        if len(out) < n:
            raise ValueError("truncated VTK file")
        pos += n
        return out

    out: dict = {"title": tokens[1]}
    while pos < len(words):
        key = take(1)[0]
        if key == "POINTS":
            n, _ = take(2)
            out["points"] = np.array(take(3 * int(n)), float).reshape(-1, 3)
        elif key == "CELLS":
            n, size = map(int, take(2))
            raw = np.array(take(size), dtype=np.int64)
            out["cells"] = raw.reshape(n, -1)[:, 1:]
        elif key == "CELL_TYPES":
            n = int(take(1)[0])
            out["cell_types"] = np.array(take(n), dtype=np.int64)
        elif key == "POINT_DATA":
            npts = int(take(1)[0])
        elif key == "SCALARS":
            name, _, _ = take(3)
            take(2)  # LOOKUP_TABLE default
            out[name] = np.array(take(npts), float)
        elif key == "VECTORS":
            name, _ = take(2)
            out[name] = np.array(take(3 * npts), float).reshape(-1, 3)
        else:
            raise ValueError(f"unexpected section {key!r}")
    return out
