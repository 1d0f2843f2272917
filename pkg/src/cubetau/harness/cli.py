"""Command line entry point: ``cubetau {solve,converge,eig,check,dump-matrix}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from ..assembly import assemble, evaluate, project_function
from ..errors import TauSpanError
from .checks import run_checks
from .config import ConfigError, ExperimentConfig, ReferenceKind, bundled_configs, load_config
from .experiment import ExperimentResult, plot_grid, run_eig, run_experiment, solve_config
from .expr import ExpressionError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_CHECK = 4

log = logging.getLogger("cubetau")


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    return cfg.with_overrides(n=args.n, scheme=args.scheme, alpha=args.alpha,
                              naive=True if args.naive else None)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_solve(args) -> int:
    cfg = _config(args)
    N = cfg.n_list[-1]
    system, result, seconds = solve_config(cfg, N)
    grid = plot_grid(cfg)
    vals = evaluate(result.u, grid, cfg.domain)
    print(f"{cfg.name}: N={N} size={system.size} method={result.method} "
          f"residual={result.residual_norm:.3e} cond={result.condition_estimate:.3e} "
          f"time={seconds:.2f}s")
    if cfg.reference.kind is ReferenceKind.MANUFACTURED:
        exact = cfg.reference.solution(*np.meshgrid(*grid, indexing="ij"))
        print(f"max error vs manufactured solution: {np.max(np.abs(vals - exact)):.3e}")
    snap = ExperimentResult(None, grid, {N: vals})
    path = snap.save_snapshots(_out_dir(args) / cfg.outputs["snapshot"])
    print(f"wrote {path}")
    return EXIT_OK


def cmd_converge(args) -> int:
    cfg = _config(args)
    result = run_experiment(cfg, out_dir=_out_dir(args), snapshots=args.snapshots)
    print(result.report.to_csv(), end="")
    print(f"wrote {Path(args.out) / cfg.outputs['csv']}")
    return EXIT_OK


def cmd_eig(args) -> int:
    cfg = _config(args)
    if cfg.reference.kind is not ReferenceKind.EIG:
        raise ConfigError(f"{cfg.name} has no eigenvalue reference")
    N = cfg.n_list[-1]
    eig = run_eig(cfg, N, count=args.count)
    path = _out_dir(args) / cfg.outputs["spectrum"]
    path.write_text(eig.spectrum_csv())
    errs = eig.rel_errors
    k = min(len(errs), args.count or cfg.eig_count)
    print(f"{cfg.name}: N={N} alpha={cfg.alpha} finite={eig.spectrum.finite_count} "
          f"infinite={eig.spectrum.infinite_count} time={eig.seconds:.2f}s")
    for i in range(k):
        w = eig.spectrum.eigenvalues[i]
        print(f"  {i:3d}  {w.real:.10e}{w.imag:+.2e}j  exact {eig.exact[i]:.10e}  rel {errs[i]:.2e}")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_check(args) -> int:
    results = run_checks(seed=args.seed)
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK


def cmd_dump(args) -> int:
    cfg = _config(args)
    N = cfg.n_list[-1]
    spec = cfg.problem(N)
    system = assemble(spec, f=project_function(cfg.forcing, spec.shape, spec.domain))
    path = _out_dir(args) / cfg.outputs["matrix"]
    path.write_text(system.to_coordinate_text())
    np.savetxt(path.with_suffix(".rhs"), system.rhs, fmt="%.17g")
    print(f"{cfg.name}: N={N} size={system.size} nnz={system.matrix.nnz}; wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cubetau",
                                description="Generalized tau solvers for Poisson and biharmonic "
                                            "problems on intervals, squares and cubes.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, with_config=True):
        if with_config:
            sp.add_argument("config", help="config file or bundled name: "
                                           + ", ".join(bundled_configs()))
            sp.add_argument("--n", type=int, help="single resolution instead of the config list")
            sp.add_argument("--scheme", choices=("dihedral", "clockwise", "eastwest"))
            sp.add_argument("--alpha", type=int, help="interior tau index")
            sp.add_argument("--naive", action="store_true",
                            help="one tau per boundary condition and no corner rows (singular)")
        sp.add_argument("--out", default=".", help="output directory")
        sp.add_argument("--seed", type=int, default=0)

    s = sub.add_parser("solve", help="solve at a single N")
    common(s)
    s.set_defaults(func=cmd_solve)
    s = sub.add_parser("converge", help="sweep N, write CSV/SVG")
    common(s)
    s.add_argument("--snapshots", choices=("last", "all", "none"), default="last")
    s.set_defaults(func=cmd_converge)
    s = sub.add_parser("eig", help="finite spectrum against the exact formula")
    common(s)
    s.add_argument("--count", type=int, help="number of eigenvalues to compare")
    s.set_defaults(func=cmd_eig)
    s = sub.add_parser("check", help="run the invariant suite")
    common(s, with_config=False)
    s.set_defaults(func=cmd_check)
    s = sub.add_parser("dump-matrix", help="write the assembled matrix in coordinate format")
    common(s)
    s.set_defaults(func=cmd_dump)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ExpressionError, TauSpanError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
