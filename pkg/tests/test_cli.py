import csv
import io
import subprocess
import sys

import numpy as np
import pytest

from wg_elasticity.analysis import error_energy, error_L2
from wg_elasticity.assembly import AssemblyOptions, Discretization, WGField, assemble, solve
from wg_elasticity.cases import CoefficientField, make_case
from wg_elasticity.cli import CSV_COLUMNS, ConfigError, RunConfig, config_from_args, main, parse_levels, run_sweep
from wg_elasticity.mesh import mesh_for_level
from wg_elasticity.vtk import export_vtk, field_triangulation, read_vtk


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_parse_levels():
    assert parse_levels("4..7") == (4, 7)
    assert parse_levels("3") == (3, 3)
    with pytest.raises(ConfigError):
        parse_levels("a..b")


def test_config_file_and_override(tmp_path):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("# sweep\ncase = example2\nmesh-family = rect\nk = 3\nstabilizer = off\nlevels = 3..4\n")
    cfg, _ = config_from_args(["--config", str(cfg_file), "--k", "2"])
    assert (cfg.case, cfg.mesh, cfg.k, cfg.stabilizer, cfg.levels) == ("example2", "rect", 2, False, (3, 4))
    cfg_file.write_text("bogus = 1\n")
    with pytest.raises(ConfigError):
        config_from_args(["--config", str(cfg_file)])


@pytest.mark.parametrize("argv", [["--k", "0"], ["--mu0", "-1"], ["--levels", "5..3"], ["--r", "-2"],
                                  ["--case", "nope"], ["--levels", "2..3"]])
def test_config_errors_exit_1(argv, capsys):
    assert main(argv) == 1
    assert "error" in capsys.readouterr().err


def test_numerical_failure_exit_2(capsys):
    assert main(["--case", "example1", "--mesh", "rect", "--stabilizer", "off", "--r", "0",
                 "--levels", "3..3"]) == 2
    assert "numerical failure" in capsys.readouterr().err


def test_csv_matches_library(tmp_path):
    out = tmp_path / "t.csv"
    argv = ["--case", "example1", "--mesh", "rect", "--k", "2", "--mu0", "10", "--lambda0", "0.5",
            "--levels", "3..4", "--csv", str(out)]
    assert main(argv) == 0
    table = rows(out.read_text())
    assert list(table[0].keys()) == CSV_COLUMNS
    case = make_case("example1", CoefficientField(10, 0.5))
    for row, level in zip(table, (3, 4)):
        u = solve(assemble(Discretization(mesh_for_level("rect", level), AssemblyOptions(k=2)), case))
        assert float(row["err_L2_full"]) == error_L2(u, case)
        assert float(row["err_energy_full"]) == error_energy(u, case)
        assert int(row["n_free"]) == u.disc.dofmap.n_free
        assert row["err_L2"] == f"{error_L2(u, case):.2e}"
    assert table[0]["rate_L2"] == "" and table[1]["rate_L2"] != ""


def test_deterministic_output(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    argv = ["--case", "example2", "--mesh", "octagon", "--k", "1", "--levels", "3..4"]
    assert main(argv + ["--csv", str(a)]) == 0
    assert main(argv + ["--csv", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_example3_blanks_and_difference(tmp_path):
    out = tmp_path / "e3.csv"
    assert main(["--case", "example3", "--mesh", "rect", "--levels", "3..5", "--csv", str(out)]) == 0
    table = rows(out.read_text())
    assert all(r["err_L2"] == "" and r["err_energy"] == "" for r in table)
    assert table[0]["diff_energy"] == ""
    d = [float(r["diff_energy"]) for r in table[1:]]
    assert d[1] < d[0]


def test_stabilizer_free_fallback_is_recorded(caplog):
    cfg = RunConfig(case="example2", mesh="rect", k=2, stabilizer=False, levels=(3, 3))
    reports = run_sweep(cfg)
    assert reports[0].r == 3
    assert "falling back" in caplog.text


def test_matrix_dump_and_vtk(tmp_path):
    m, v = tmp_path / "A.txt", tmp_path / "u.vtk"
    assert main(["--case", "example3", "--levels", "3..3", "--dump-matrix", str(m), "--vtk", str(v)]) == 0
    first = m.read_text().splitlines()[0].split()
    assert len(first) == 3 and int(first[0]) == 0
    data = read_vtk(v)
    assert data["points"].shape[1] == 3 and np.all(data["cell_types"] == 5)
    assert np.allclose(data["u"][:, :2], np.column_stack([data["u_x"], data["u_y"]]))


def test_vtk_zero_field_and_roundtrip(tmp_path):
    disc = Discretization(mesh_for_level("octagon", 3), AssemblyOptions(k=2))
    zero = WGField(disc, np.zeros(disc.dofmap.n_full))
    export_vtk(zero, tmp_path / "z.vtk")
    data = read_vtk(tmp_path / "z.vtk")
    assert np.all(data["u_x"] == 0) and np.all(data["u_y"] == 0)
    case = make_case("example1", CoefficientField(3, 1))
    u = WGField(disc, disc.interpolate(case))
    export_vtk(u, tmp_path / "u.vtk")
    P, T, U = field_triangulation(u)
    data = read_vtk(tmp_path / "u.vtk")
    assert np.array_equal(data["points"][:, :2], P)
    assert np.array_equal(data["cells"], T)
    assert np.array_equal(data["u_x"], U[:, 0]) and np.array_equal(data["u_y"], U[:, 1])


def test_example3_moves_up(tmp_path):
    path = tmp_path / "e3.vtk"
    assert main(["--case", "example3", "--levels", "4..4", "--vtk", str(path)]) == 0
    assert read_vtk(path)["u_y"].mean() > 0


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "wg_elasticity", "--case", "example1", "--levels", "3..3"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout.startswith("level,h,n_free")
