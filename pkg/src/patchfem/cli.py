"""Command-line front end: solve, convergence, sweep, angles subcommands.

Exit codes: 0 on success, 1 on runtime failure (non-convergence, unresolvable
cut), 2 on usage errors.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .problems import InsufficientData
from .runner import (
    ANGLES_HEADER,
    DEFAULT_ALPHA_GRID,
    DEFAULT_EPS_GRID,
    MAX_ANGLE_BOUND,
    SOLVE_HEADER,
    SWEEP_HEADER,
    RunConfig,
    run_angles,
    run_convergence,
    run_single,
    run_sweep,
    write_csv,
)
from .solver import NonConvergence

__all__ = ["main", "build_parser"]


def _float_list(text: str):
    try:
        return [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad float list {text!r}") from exc


def _int_list(text: str):
    try:
        return [int(v) for v in text.split(",") if v.strip() != ""]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad int list {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="patchfem",
        description="Patch finite elements for two-phase diffusion problems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_mode=True):
        p.add_argument("--problem", choices=["circle", "horizontal", "tilted"],
                       default="circle")
        p.add_argument("--strategy", type=int, choices=[1, 2, 3], default=2)
        if with_mode:
            p.add_argument("--mode", choices=["adapted", "baseline"],
                           default="adapted")
        p.add_argument("--eps", type=float, default=0.5,
                       help="interface offset for the horizontal problem")
        p.add_argument("--alpha", type=float, default=float(np.pi / 4),
                       help="interface angle for the tilted problem")
        p.add_argument("--out", default=None, help="CSV output path")

    p_solve = sub.add_parser("solve", help="solve one configuration")
    common(p_solve)
    p_solve.add_argument("--n", type=int, default=16)
    p_solve.add_argument("--dump-mesh", default=None,
                         help="write the adapted mesh as JSON")

    p_conv = sub.add_parser("convergence", help="refinement study with rates")
    common(p_conv)
    p_conv.add_argument("--levels", type=_int_list, default=[8, 16, 32, 64, 128],
                        help="comma-separated grid sizes")

    p_sweep = sub.add_parser("sweep", help="interface-position sweep")
    common(p_sweep, with_mode=False)
    p_sweep.add_argument("--values", type=_float_list, default=None,
                         help="comma-separated sweep values")
    p_sweep.add_argument("--n", type=_int_list, default=[16, 32, 64],
                         help="comma-separated grid sizes")

    p_angles = sub.add_parser("angles", help="per-patch maximum-angle audit")
    common(p_angles, with_mode=False)
    p_angles.add_argument("--n", type=int, default=32)
    return parser


def _print_rows(header, rows):
    print(",".join(header))
    for row in rows:
        print(",".join(repr(float(v)) if isinstance(v, float) else str(v)
                       for v in row))


def _cmd_solve(args) -> int:
    cfg = RunConfig(problem=args.problem, n=args.n, strategy=args.strategy,
                    mode=args.mode, eps=args.eps, alpha=args.alpha,
                    dump_mesh=args.dump_mesh)
    row = run_single(cfg)
    rows = [row.as_list()]
    if args.out:
        write_csv(args.out, SOLVE_HEADER, rows)
    _print_rows(SOLVE_HEADER, rows)
    return 0


def _cmd_convergence(args) -> int:
    rows, l2_rate, h1_rate = run_convergence(
        args.problem, args.levels, args.strategy, args.mode,
        eps=args.eps, alpha=args.alpha,
    )
    out_rows = [r.as_list() for r in rows]
    if l2_rate is not None:
        out_rows.append([args.problem, args.mode, args.strategy, "rates", "", "",
                         l2_rate, h1_rate, "", ""])
    if args.out:
        write_csv(args.out, SOLVE_HEADER, out_rows)
    _print_rows(SOLVE_HEADER, out_rows)
    if l2_rate is None:
        raise InsufficientData("need at least two levels for rates")
    return 0


def _cmd_sweep(args, parser) -> int:
    if args.problem == "horizontal":
        param, default = "eps", DEFAULT_EPS_GRID
    elif args.problem == "tilted":
        param, default = "alpha", DEFAULT_ALPHA_GRID
    else:
        parser.error("sweep supports the horizontal and tilted problems")
    values = args.values if args.values is not None else default
    if not values:
        parser.error("empty sweep value grid")
    rows = run_sweep(args.problem, param, values, args.n, args.strategy)
    if args.out:
        write_csv(args.out, SWEEP_HEADER, rows)
    _print_rows(SWEEP_HEADER, rows)
    return 0


def _cmd_angles(args) -> int:
    audit = run_angles(args.problem, args.n, args.strategy,
                       eps=args.eps, alpha=args.alpha)
    if args.out:
        write_csv(args.out, ANGLES_HEADER, audit.rows)
    print(f"global max angle: {audit.global_max:.6f} deg over "
          f"{len(audit.rows)} patches")
    if audit.global_max > MAX_ANGLE_BOUND:
        print("maximum angle bound exceeded", file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "solve":
            return _cmd_solve(args)
        if args.command == "convergence":
            return _cmd_convergence(args)
        if args.command == "sweep":
            return _cmd_sweep(args, parser)
        return _cmd_angles(args)
    except (NonConvergence, RuntimeError, InsufficientData, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
