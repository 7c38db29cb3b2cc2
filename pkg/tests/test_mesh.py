import numpy as np
import pytest
from hypothesis import given, strategies as st

from wg_elasticity.mesh import (BOUNDARY, INTERFACE, INTERIOR, MeshError, PolyMesh, gen_polygon_mesh,
                                gen_rect_mesh, mesh_for_level, point_in_polygon, read_mesh, tag_interface,
                                validate, write_mesh)


def count_kinds(mesh):
    return {k: int(np.sum(mesh.edge_kind == k)) for k in (INTERIOR, BOUNDARY, INTERFACE)}


def interface_edges_by_enumeration(n):
    """Grid edges of length 1/n lying on x or y in {1/4, 3/4}, between 1/4 and 3/4."""
    lo, hi = n // 4, 3 * n // 4
    count = 0
    for line in (lo, hi):
        for i in range(lo, hi):
            count += 2  # one horizontal, one vertical segment per step on this line
    return count


def test_rect_n1():
    m = gen_rect_mesh(1)
    assert (m.n_cells, m.n_edges, len(m.vertices)) == (1, 4, 4)


def test_rect_rejects_zero():
    with pytest.raises(MeshError):
        gen_rect_mesh(0)


def test_rect_n4_tagging():
    m = gen_rect_mesh(4, tag=True)
    assert m.n_cells == 16 and m.n_edges == 40
    assert np.sum(m.cell_subdomain == 2) == 4
    inside = np.all((m.cell_centroid > 0.25) & (m.cell_centroid < 0.75), axis=1)
    assert np.array_equal(m.cell_subdomain == 2, inside)
    assert count_kinds(m) == {INTERIOR: 16, BOUNDARY: 16, INTERFACE: 8}
    assert count_kinds(m)[INTERFACE] == interface_edges_by_enumeration(4)


@pytest.mark.parametrize("n", [4, 8, 16])
def test_interface_count_matches_enumeration(n):
    m = gen_rect_mesh(n, tag=True)
    assert count_kinds(m)[INTERFACE] == interface_edges_by_enumeration(n)


def test_rect_n8_has_16_interface_edges():
    assert count_kinds(gen_rect_mesh(8, tag=True))[INTERFACE] == 16


def test_n2_tagging_fails():
    with pytest.raises(MeshError, match="interface"):
        gen_rect_mesh(2, tag=True)


def test_n1_no_interface():
    m = gen_rect_mesh(1, tag=True)
    assert count_kinds(m)[INTERFACE] == 0 and np.all(m.cell_subdomain == 1)


def test_polygon_counts():
    m1 = gen_polygon_mesh(1)
    assert m1.n_cells == 1 and len(m1.cells[0]) == 8 and m1.n_edges == 8
    m4 = gen_polygon_mesh(4, tag=True)
    assert m4.n_cells == 16 and m4.n_edges == 80
    assert count_kinds(m4)[INTERFACE] == 16


@pytest.mark.parametrize("family", ["rect", "octagon"])
@pytest.mark.parametrize("level", [1, 3, 4, 5])
def test_tiling_and_validation(family, level):
    m = mesh_for_level(family, level)
    assert abs(m.cell_area.sum() - 1.0) <= 1e-12
    rep = validate(m)
    assert rep.passed, rep.failures
    assert abs(rep.diameter_ratio - 1.0) < 1e-12


@pytest.mark.parametrize("family", ["rect", "octagon"])
def test_refinement_halves_h(family):
    hs = [mesh_for_level(family, lev).h for lev in (3, 4, 5)]
    assert hs[1] == hs[0] / 2 and hs[2] == hs[1] / 2


def test_edges_appear_in_incident_loops():
    m = gen_polygon_mesh(4, tag=True)
    seen = np.zeros(m.n_edges, int)
    for ce in m.cell_edges:
        np.add.at(seen, ce, 1)
    expected = np.where(m.edge_kind == BOUNDARY, 1, 2)
    assert np.array_equal(seen, expected)
    iface = m.edge_kind == INTERFACE
    l, r = m.edge_cells[iface].T
    assert np.all(m.cell_subdomain[l] != m.cell_subdomain[r])


def test_tag_idempotent():
    m = gen_polygon_mesh(8, tag=True)
    m2 = tag_interface(m)
    assert np.array_equal(m.cell_subdomain, m2.cell_subdomain)
    assert np.array_equal(m.edge_kind, m2.edge_kind)
    assert np.array_equal(m.edge_piece, m2.edge_piece)


def test_validate_flags_clockwise_cell():
    m = gen_rect_mesh(2)
    cells = list(m.cells)
    cells[0] = cells[0][::-1]
    bad = PolyMesh.from_cells(m.vertices, cells)
    rep = validate(bad)
    assert not rep.passed
    assert not rep.orientation_ok


def test_validate_polygon_uniform():
    rep = validate(gen_polygon_mesh(8, tag=True))
    assert rep.passed and abs(rep.area_sum - 1) < 1e-12 and rep.diameter_ratio == pytest.approx(1.0)


def test_mesh_roundtrip(tmp_path):
    m = gen_polygon_mesh(4, tag=True)
    path = tmp_path / "mesh.txt"
    write_mesh(m, path)
    head = path.read_text().splitlines()[0]
    assert head.split() == [str(len(m.vertices)), str(m.n_cells)]
    m2 = read_mesh(path)
    assert np.array_equal(m.vertices, m2.vertices)
    assert all(np.array_equal(a, b) for a, b in zip(m.cells, m2.cells))
    assert np.array_equal(m.cell_subdomain, m2.cell_subdomain)
    assert np.array_equal(m.edge_kind, m2.edge_kind)


def test_point_in_polygon():
    sq = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], float)
    pts = np.array([[0.5, 0.5], [1.5, 0.5], [0.2, 0.9], [-0.1, 0.1]])
    assert point_in_polygon(pts, sq).tolist() == [True, False, True, False]


@given(st.sampled_from(["rect", "octagon"]), st.integers(min_value=1, max_value=4))
def test_generated_meshes_are_valid(family, level):
    if level == 2:
        with pytest.raises(MeshError):
            mesh_for_level(family, level)
        return
    m = mesh_for_level(family, level)
    rep = validate(m)
    assert rep.passed and rep.manifold_ok and rep.interface_ok
