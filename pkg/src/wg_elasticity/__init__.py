"""Weak Galerkin finite elements for 2D linear elasticity with a material interface."""
from .analysis import ErrorReport, convergence_rates, error_energy, error_L2, successive_difference
from .assembly import AssemblyOptions, Discretization, NumericalError, WGField, assemble, solve, solve_case
from .cases import CoefficientField, ManufacturedCase, NoExactSolution, make_case
from .mesh import MeshError, PolyMesh, gen_polygon_mesh, gen_rect_mesh, mesh_for_level, tag_interface

__all__ = [
    "AssemblyOptions", "CoefficientField", "Discretization", "ErrorReport", "ManufacturedCase",
    "MeshError", "NoExactSolution", "NumericalError", "PolyMesh", "WGField", "assemble",
    "convergence_rates", "error_L2", "error_energy", "gen_polygon_mesh", "gen_rect_mesh",
    "make_case", "mesh_for_level", "solve", "solve_case", "successive_difference", "tag_interface",
]
