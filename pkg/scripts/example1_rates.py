"""Example 1 convergence table: k=1, stabilized, three coefficient contrasts.

    python3 scripts/example1_rates.py --mesh octagon --levels 4..7 --out results/
"""
import argparse
from pathlib import Path

from wg_elasticity.cli import RunConfig, format_csv, parse_levels, run_sweep

COEFFS = [(1.0, 1.0), (1e2, 1e-2), (1e-1, 10.0)]


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--mesh", default="octagon", choices=["octagon", "rect"])
    p.add_argument("--levels", default="4..7")
    p.add_argument("--out", help="directory for one CSV per coefficient pair")
    args = p.parse_args()
    for mu0, lam0 in COEFFS:
        cfg = RunConfig(case="example1", mesh=args.mesh, k=1, mu0=mu0, lambda0=lam0,
                        levels=parse_levels(args.levels))
        text = format_csv(run_sweep(cfg))
        print(f"# mu0={mu0:g} lambda0={lam0:g} mesh={args.mesh}\n{text}")
        if args.out:
            Path(args.out).mkdir(parents=True, exist_ok=True)
            Path(args.out, f"example1_{args.mesh}_mu{mu0:g}_lam{lam0:g}.csv").write_text(text)


if __name__ == "__main__":
    main()
