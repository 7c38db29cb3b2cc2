"""Example 3 (unit load, no exact solution): successive differences and VTK output.

    python3 scripts/example3.py --k 1 --levels 3..6 --out results/
"""
import argparse
from pathlib import Path

from wg_elasticity.analysis import mean_displacement
from wg_elasticity.cases import CoefficientField, make_case
from wg_elasticity.cli import RunConfig, format_csv, parse_levels, run_sweep, solve_level

COEFFS = [(1.0, 1.0), (1e3, 1e-3), (1e-3, 1e3)]


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--mesh", default="octagon", choices=["octagon", "rect"])
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--levels", default="3..6")
    p.add_argument("--out", default="results")
    args = p.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    levels = parse_levels(args.levels)
    for mu0, lam0 in COEFFS:
        stem = f"example3_{args.mesh}_k{args.k}_mu{mu0:g}_lam{lam0:g}"
        cfg = RunConfig(case="example3", mesh=args.mesh, k=args.k, mu0=mu0, lambda0=lam0, levels=levels,
                        vtk=str(out / f"{stem}.vtk"))
        text = format_csv(run_sweep(cfg))
        (out / f"{stem}.csv").write_text(text)
        u, _, _ = solve_level(cfg, levels[1], make_case("example3", CoefficientField(mu0, lam0)))
        ux, uy = mean_displacement(u)
        print(f"# mu0={mu0:g} lambda0={lam0:g} mean u=({ux:.3e}, {uy:.3e})\n{text}")


if __name__ == "__main__":
    main()
