"""Convergence sweeps from the command line.

    wg-elasticity --case example1 --mesh octagon --k 1 --levels 4..7 --csv out.csv

Exit codes: 0 success, 1 bad configuration, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .analysis import ErrorReport, convergence_rates, error_energy, error_L2, successive_difference
from .assembly import AssemblyOptions, Discretization, NumericalError, WGField, assemble, dump_matrix, \
    lanczos_min_ritz, solve
from .cases import CASES, CoefficientField, make_case
from .mesh import MeshError, mesh_for_level
from .vtk import export_vtk

log = logging.getLogger("wg_elasticity")

CSV_COLUMNS = ["level", "h", "n_free", "err_L2", "rate_L2", "err_energy", "rate_energy",
               "err_L2_full", "err_energy_full", "diff_energy", "rate_diff", "r"]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    case: str = "example1"
    mesh: str = "octagon"
    k: int = 1
    r: int | None = None
    stabilizer: bool = True
    mu0: float = 1.0
    lambda0: float = 1.0
    levels: tuple[int, int] = (3, 5)
    solver: str = "direct"
    csv: str | None = None
    vtk: str | None = None
    dump_matrix: str | None = None
    quad_boost: int = 0
    seed: int = 0
    condense: bool = False
    trace_degree: int | None = None
    check_spd: bool = False

    def validate(self) -> "RunConfig":
        if self.case not in CASES:
            raise ConfigError(f"unknown case {self.case!r}")
        if self.mesh not in ("rect", "octagon"):
            raise ConfigError(f"unknown mesh family {self.mesh!r}")
        if not 1 <= self.k <= 4:
            raise ConfigError("k must be in 1..4")
        if self.r is not None and self.r < 0:
            raise ConfigError("r must be non-negative")
        if self.mu0 <= 0 or self.lambda0 <= 0:
            raise ConfigError("mu0 and lambda0 must be positive")
        lo, hi = self.levels
        if lo < 1 or hi < lo:
            raise ConfigError(f"bad level range {lo}..{hi}")
        if self.solver not in ("direct", "cg"):
            raise ConfigError(f"unknown solver {self.solver!r}")
        if self.quad_boost < 0:
            raise ConfigError("quad-boost must be non-negative")
        if self.trace_degree is not None and self.trace_degree < 1:
            raise ConfigError("trace-degree must be at least 1")
        return self


def parse_levels(text: str) -> tuple[int, int]:
    parts = text.replace("-", "..").split("..")
    try:
        if len(parts) == 1:
            v = int(parts[0])
            return v, v
        if len(parts) == 2:
            return int(parts[0]), int(parts[1])
    except ValueError:
        pass
    raise ConfigError(f"levels must look like A..B, got {text!r}")


def _parse_bool(text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("on", "true", "yes", "1"):
        return True
    if t in ("off", "false", "no", "0"):
        return False
    raise ConfigError(f"expected on/off, got {text!r}")


def _coerce(name: str, value):
    if value is None:
        return None
    if name == "levels":
        return value if isinstance(value, tuple) else parse_levels(str(value))
    if name in ("stabilizer", "condense", "check_spd"):
        return _parse_bool(value)
    try:
        if name in ("k", "quad_boost", "seed"):
            return int(value)
        if name in ("r", "trace_degree"):
            return None if str(value).lower() in ("", "none", "auto") else int(value)
        if name in ("mu0", "lambda0"):
            return float(value)
    except ValueError:
        raise ConfigError(f"bad value for {name}: {value!r}") from None
    return str(value)


def read_config_file(path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment, dashes in keys are allowed."""
    known = {f.name for f in fields(RunConfig)}
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key == "mesh_family":
            key = "mesh"
        if key not in known:
            raise ConfigError(f"{path}:{n}: unknown key {key!r}")
        out[key] = _coerce(key, value)
    return out


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit code 1 for bad flags, not argparse's 2
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="wg-elasticity",
                                description="Weak Galerkin elasticity interface solver: convergence sweeps.")
    p.add_argument("--config", help="flat key=value file; command-line flags override it")
    p.add_argument("--case", choices=sorted(CASES))
    p.add_argument("--mesh", choices=["rect", "octagon"])
    p.add_argument("--k", type=int)
    p.add_argument("--r", help="weak-operator degree (default k-1; 'auto' allows the k+1 fallback)")
    p.add_argument("--stabilizer", choices=["on", "off"])
    p.add_argument("--mu0", type=float)
    p.add_argument("--lambda0", type=float)
    p.add_argument("--levels", help="inclusive range A..B; level l uses n = 2^(l-1)")
    p.add_argument("--solver", choices=["direct", "cg"])
    p.add_argument("--csv", help="write the error table here (default: stdout only)")
    p.add_argument("--vtk", help="write u_0 of the finest level as legacy VTK")
    p.add_argument("--dump-matrix", dest="dump_matrix", help="write the finest-level matrix as row col value")
    p.add_argument("--quad-boost", dest="quad_boost", type=int, help="add N to all quadrature degrees")
    p.add_argument("--seed", type=int, help="seed for randomized checks")
    p.add_argument("--condense", choices=["on", "off"], help="static condensation of cell unknowns")
    p.add_argument("--trace-degree", dest="trace_degree",
                   help="use [P_j(e)]^2 edge values instead of S_k(e) (experimental)")
    p.add_argument("--check-spd", dest="check_spd", action="store_true",
                   help="log the smallest Lanczos Ritz value of each matrix")
    p.add_argument("-v", "--verbose", action="count", default=0)
    return p


def config_from_args(argv=None) -> tuple[RunConfig, int]:
    args = build_parser().parse_args(argv)
    values = read_config_file(args.config) if args.config else {}
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is None or (f.name == "check_spd" and v is False):
            continue
        values[f.name] = _coerce(f.name, v)
    return replace(RunConfig(), **values).validate(), args.verbose


# -- sweep ----------------------------------------------------------------

def _options(cfg: RunConfig, r: int | None) -> AssemblyOptions:
    return AssemblyOptions(k=cfg.k, r=r, stabilizer=cfg.stabilizer, quad_boost=cfg.quad_boost,
                           condense=cfg.condense, trace_degree=cfg.trace_degree)


def solve_level(cfg: RunConfig, level: int, case):
    """Mesh, assemble and solve one level; returns (field, system, r used).

    Without the stabilizer and without an explicit ``r``, ``r = k - 1`` is tried
    first and ``r = k + 1`` is used if the factorization fails.
    """
    mesh = mesh_for_level(cfg.mesh, level)
    tries = [cfg.r] if cfg.r is not None or cfg.stabilizer else [None, cfg.k + 1]
    for i, r in enumerate(tries):
        disc = Discretization(mesh, _options(cfg, r))
        system = assemble(disc, case)
        try:
            return solve(system, cfg.solver), system, disc.r
        except NumericalError as exc:
            if i + 1 == len(tries):
                raise
            log.warning("level %d: r=%d failed (%s); falling back to r=%d", level, disc.r, exc, tries[i + 1])
    raise AssertionError("unreachable")


def run_sweep(cfg: RunConfig) -> list[ErrorReport]:
    cfg.validate()
    case = make_case(cfg.case, CoefficientField(cfg.mu0, cfg.lambda0))
    reports: list[ErrorReport] = []
    prev: WGField | None = None
    last = None
    for level in range(cfg.levels[0], cfg.levels[1] + 1):
        u, system, r = solve_level(cfg, level, case)
        disc = u.disc
        rep = ErrorReport(level, disc.mesh.h, disc.dofmap.n_free, r=r)
        if case.has_exact:
            rep.err_L2 = error_L2(u, case)
            rep.err_energy = error_energy(u, case)
        elif prev is not None and prev.disc.r == r:
            rep.diff_energy = successive_difference(prev, u)
        if cfg.check_spd and system.matrix.shape[0]:
            log.info("level %d: smallest Ritz value %.3e", level,
                     lanczos_min_ritz(system.matrix, seed=cfg.seed))
        log.info("level %d: h=%.4g n_free=%d residual=%.2e", level, rep.h, rep.n_free, u.residual)
        reports.append(rep)
        prev, last = u, (u, system)
    for attr in ("L2", "energy"):
        rates = convergence_rates([getattr(r, "err_" + attr) for r in reports])
        for rep, rate in zip(reports[1:], rates):
            setattr(rep, "rate_" + attr, rate)
    rates = convergence_rates([r.diff_energy for r in reports])
    for rep, rate in zip(reports[1:], rates):
        rep.rate_diff = rate
    if last is not None:
        u, system = last
        if cfg.vtk:
            export_vtk(u, cfg.vtk)
        if cfg.dump_matrix:
            dump_matrix(system.matrix, cfg.dump_matrix)
    return reports


def _sci(v) -> str:
    return "" if v is None else f"{v:.2e}"


def _rate(v) -> str:
    return "" if v is None else f"{v:.2f}"


def _full(v) -> str:
    return "" if v is None else repr(float(v))


def format_csv(reports: list[ErrorReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for rep in reports:
        w.writerow([rep.level, f"{rep.h:.6g}", rep.n_free, _sci(rep.err_L2), _rate(rep.rate_L2),
                    _sci(rep.err_energy), _rate(rep.rate_energy), _full(rep.err_L2), _full(rep.err_energy),
                    _sci(rep.diff_energy), _rate(rep.rate_diff), "" if rep.r is None else rep.r])
    return buf.getvalue()


def main(argv=None) -> int:
    try:
        cfg, verbose = config_from_args(argv)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.WARNING - 10 * min(verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        reports = run_sweep(cfg)
    except (ConfigError, MeshError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (NumericalError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    text = format_csv(reports)
    if cfg.csv:
        Path(cfg.csv).write_text(text)
    sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
