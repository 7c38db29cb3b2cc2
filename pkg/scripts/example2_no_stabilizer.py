"""Example 2 without the stabilizer: k=3 exactness and k=2 rates.

By default the edge space is S_k(e) and the weak degree falls back from k-1 to
k+1 when the system is singular.  ``--trace-degree-k`` switches to the
experimental [P_k(e)]^2 edge space with r = k+1.

    python3 scripts/example2_no_stabilizer.py --levels 3..6
"""
import argparse
from pathlib import Path

from wg_elasticity.cli import RunConfig, format_csv, parse_levels, run_sweep

COEFFS = [(1.0, 1.0), (1e2, 1e-2)]


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--levels", default="3..6")
    p.add_argument("--k", type=int, nargs="+", default=[3, 2])
    p.add_argument("--trace-degree-k", action="store_true", help="edge values in [P_k(e)]^2, r = k+1")
    p.add_argument("--out", help="directory for one CSV per run")
    args = p.parse_args()
    for k in args.k:
        for mu0, lam0 in COEFFS:
            extra = dict(trace_degree=k, r=k + 1) if args.trace_degree_k else {}
            cfg = RunConfig(case="example2", mesh="rect", k=k, stabilizer=False, mu0=mu0, lambda0=lam0,
                            levels=parse_levels(args.levels), **extra)
            text = format_csv(run_sweep(cfg))
            tag = "pk_edges" if args.trace_degree_k else "sk_edges"
            print(f"# k={k} mu0={mu0:g} lambda0={lam0:g} {tag}\n{text}")
            if args.out:
                Path(args.out).mkdir(parents=True, exist_ok=True)
                Path(args.out, f"example2_k{k}_mu{mu0:g}_lam{lam0:g}_{tag}.csv").write_text(text)


if __name__ == "__main__":
    main()
