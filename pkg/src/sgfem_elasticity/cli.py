"""Command line entry point: ``sgfem {solve,table,spectrum,validate,dof}``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

import numpy as np

from . import experiments as ex
from .exceptions import InadmissibleFieldError, InvalidArgumentError

log = logging.getLogger("sgfem_elasticity")


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key = value file; flags override it")
    parser.add_argument("--level", type=int)
    parser.add_argument("-M", "--M", dest="M", type=int)
    parser.add_argument("-p", "--p", dest="p", type=int)
    parser.add_argument("--nu", type=float)
    parser.add_argument("--sigma", type=float)
    parser.add_argument("--pressure", dest="pressure_family", choices=("P-1", "Q1"))
    parser.add_argument("--precond", dest="variant",
                        help="laplacian (default), mean-full or component")
    parser.add_argument("--tol", type=float)
    parser.add_argument("--maxit", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--samples", type=int)
    parser.add_argument("-o", "--output", help="CSV output path")


def _config(args, mode: str) -> ex.ExperimentConfig:
    keys = ("level", "M", "p", "nu", "sigma", "pressure_family", "variant", "tol", "maxit",
            "seed", "samples", "output")
    overrides = {k: getattr(args, k, None) for k in keys}
    overrides["mode"] = mode
    if args.config:
        return ex.ExperimentConfig.from_file(args.config, **overrides)
    return ex.ExperimentConfig.from_mapping(overrides)


def _print_record(rec: ex.ResultRecord) -> None:
    c = rec.config
    status = "converged" if rec.converged else ("FAILED " + rec.error if rec.error else "not converged")
    print(f"level={c.level} M={c.M} p={c.p} nu={c.nu} sigma={c.sigma} variant={c.variant} "
          f"dim={rec.dim} iters={rec.iterations} time={rec.wall_time:.1f}s {status}")
    if rec.iterations >= 5:
        (a, b), (d, e) = rec.ritz_negative, rec.ritz_positive
        print(f"  Ritz estimate: [{a:.4f}, {b:.4f}] U [{d:.4f}, {e:.4f}]")
    if rec.bounds:
        (a, b), (d, e) = rec.bounds["union"]
        print(f"  analytic union: [{a:.4f}, {b:.4f}] U [{d:.4f}, {e:.4f}] "
              f"(C_K={rec.bounds['korn']:.4f}, gamma={rec.bounds['gamma']:.4f})")


def cmd_solve(args) -> int:
    cfg = _config(args, "spectrum" if args.command == "spectrum" else "solve")
    rec = ex.run_experiment(cfg, with_bounds=args.command == "spectrum")
    _print_record(rec)
    if cfg.output:
        ex.write_records([rec], cfg.output)
    return 0 if rec.converged else 1


def cmd_table(args) -> int:
    tid = args.table.upper()
    base = _config(args, "dof-table" if tid in ("T1", "T2") else "solve")
    levels = tuple(args.levels) if args.levels else ex.LEVELS
    Ms = tuple(args.Ms) if args.Ms else ex.M_GRID
    out = args.output
    if tid in ("T1", "T2"):
        rows = ex.run_table(tid, out, base=base)
        for r in rows:
            print(" ".join(str(v) for v in r))
        return 0
    records = ex.run_table(tid, out, levels=levels, Ms=Ms, base=base, workers=args.workers,
                           progress=_print_record)
    return 0 if all(r.converged and not r.error for r in records) else 1


def cmd_dof(args) -> int:
    cfg = _config(args, "dof-table")
    n_u, n_p, ny, dim = ex.problem_size(cfg)
    print(f"level={cfg.level} M={cfg.M} p={cfg.p} n_u={n_u} n_p={n_p} n_y={ny} "
          f"dofs={2 * (n_u + n_p)} dim={dim}")
    return 0


def cmd_validate(args) -> int:
    from .assembly import assemble_fe_blocks, assemble_rhs, build_operator
    from .mesh import build_mesh, build_spaces
    from .random_field import kl_2d_modes
    from .solver import build_preconditioner, minres_solve
    from .stochastic_basis import build_couplings, build_multi_index_set
    from .validation import SurrogateEvaluation, surrogate_error

    cfg = _config(args, "validate")
    spaces = build_spaces(build_mesh(cfg.level), cfg.pressure_family)
    fld = kl_2d_modes(cfg.M, cfg.sigma, cfg.correlation_length)
    blocks = assemble_fe_blocks(spaces, fld)
    ix = build_multi_index_set(cfg.M, cfg.p)
    cp = build_couplings(ix)
    op = build_operator(blocks, cp, cfg.nu)
    P = build_preconditioner(blocks, cp, cfg.nu, cfg.variant, blocks.constant_mean)
    res = minres_solve(op, P, assemble_rhs(blocks, cp), tol=cfg.tol, maxit=cfg.maxit)
    sg = SurrogateEvaluation.from_vector(res.solution, ix, spaces.n_u, spaces.n_p)
    stats = surrogate_error(sg, spaces, fld, cfg.nu, samples=cfg.samples, seed=cfg.seed)
    print(f"iters={res.iterations} converged={res.converged} samples={cfg.samples} "
          f"mean_rel_error={stats.mean:.3e} max_rel_error={stats.max:.3e}")
    if cfg.output:
        np.savetxt(cfg.output, np.column_stack([stats.samples, stats.errors]), delimiter=",",
                   header=",".join([f"y{k + 1}" for k in range(cfg.M)] + ["rel_error"]),
                   comments="")
    return 0 if res.converged and np.all(np.isfinite(stats.errors)) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sgfem", description="Stochastic Galerkin mixed FEM for uncertain elasticity")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, text in (("solve", cmd_solve, "solve one configuration"),
                           ("spectrum", cmd_solve, "solve and report spectral estimates and bounds"),
                           ("validate", cmd_validate, "compare the surrogate with sampled solves"),
                           ("dof", cmd_dof, "print problem dimensions")):
        sp = sub.add_parser(name, help=text)
        _common(sp)
        sp.set_defaults(func=fn)
    tp = sub.add_parser("table", help="reproduce one of the tables T1..T7")
    tp.add_argument("table", choices=ex.TABLE_IDS + tuple(t.lower() for t in ex.TABLE_IDS))
    _common(tp)
    tp.add_argument("--levels", type=int, nargs="+")
    tp.add_argument("--Ms", type=int, nargs="+")
    tp.add_argument("--workers", type=int,
                    help=f"parallel cells (default: ${ex.THREADS_ENV} or 1)")
    tp.set_defaults(func=cmd_table)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (InvalidArgumentError, InadmissibleFieldError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
