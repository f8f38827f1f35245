"""Command-line front end.

Every output starts with a header line holding the normalized parameters,
the seed and the tool version, so a header fully determines the output.
Exit codes: 0 success or unobstructed, 1 obstructed, 2 usage or parse
error, 3 critical verdict or numerical non-convergence.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .basins import Viewport, rasterize_basins, write_ppm
from .errors import ConvergenceFailure, DomainError, ParseError, SolverDiverged
from .extremal.disks import arc_degeneration_pair, local_degeneration, read_config, width_csv
from .moduli import (format_complex, format_point, is_infinity, multiplier_point, normal_form, parse_complex,
                     parse_point)
from .obstruction import (CurveSystem, TreeDynamics, matrix_csv, pulled_off_constant,
                          read_obstruction_file, solve_MvDv, speed_gap, transition_matrix,
                          tree_matrices, verdict)
from .planner import (DEFAULT_DEPTH, DEFAULT_K, DEFAULT_M, DEFAULT_V, DEFAULT_W, build_plan,
                      plan_csv, stability_report)
from .rotation import RotationNumber, convergents, diffeo_tiling, parse_rotation

EXIT_OK, EXIT_OBSTRUCTED, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def header(command: str, params: dict, seed: int) -> str:
    fields = " ".join(f"{k}={v}" for k, v in params.items())
    return f"# siegelbounds {__version__} {command} {fields} seed={seed}".replace("  ", " ")


def _fmt(z: complex) -> str:
    return format_complex(complex(z))


def _angle(text: str):
    """A rotation number string or a decimal in [0, 1)."""
    text = text.strip()
    if text.startswith("["):
        return parse_rotation(text)
    try:
        return float(text)
    except ValueError:
        raise ParseError(f"bad angle {text!r}") from None


def _rotation(text: str) -> RotationNumber:
    return parse_rotation(text)


# ---------------------------------------------------------------- commands


def cmd_tiling(args) -> tuple[str, int]:
    theta = _rotation(args.theta)
    tiling = diffeo_tiling(theta, args.c, args.m)
    table = convergents(theta, args.m + 2)
    short = table[args.m].length
    out = [header("tiling", {"theta": theta, "m": args.m, "c": repr(args.c)}, args.seed),
           "index,left,length,length_class"]
    for i, cell in enumerate(tiling.cells):
        cls = "short" if abs(cell.length - short) <= 1e-12 else "long"
        out.append(f"{i},{cell.left!r},{cell.length!r},{cls}")
    return "\n".join(out) + "\n", EXIT_OK


def cmd_map(args) -> tuple[str, int]:
    r1, r2 = _point(args)
    pt = multiplier_point(r1, r2)
    out = [header("map", {"point": format_point(r1, r2).replace(" ", ",")}, args.seed),
           "quantity,value"]
    out.append(f"rho3,{_fmt(pt.rho3)}")
    out.append(f"degenerate,{int(pt.degenerate)}")
    if not pt.degenerate:
        f = normal_form(pt)
        for name, z in zip(("z0", "zinf", "z3"), f.fixed_points):
            out.append(f"{name},{'inf' if is_infinity(z) else _fmt(z)}")
            out.append(f"multiplier_{name},{_fmt(f.multiplier(z))}")
        for k, c in enumerate(f.critical_points):
            out.append(f"critical_{k},{'inf' if is_infinity(c) else _fmt(c)}")
    return "\n".join(out) + "\n", EXIT_OK


def _point(args) -> tuple[complex, complex]:
    if args.point:
        return parse_point(args.point)
    if args.rho1 is None or args.rho2 is None:
        raise ParseError("give --point or both --rho1 and --rho2")
    return parse_complex(args.rho1), parse_complex(args.rho2)


def cmd_render(args):
    r1, r2 = _point(args)
    f = normal_form(multiplier_point(r1, r2))
    try:
        box = [float(s) for s in args.viewport.split(",")]
        w, h = (int(s) for s in args.res.lower().split("x"))
    except ValueError:
        raise ParseError("viewport is xmin,xmax,ymin,ymax and res is WxH") from None
    if len(box) != 4:
        raise ParseError("viewport needs four numbers")
    view = Viewport(*box)
    image = rasterize_basins(f, view, (w, h), args.max_iter, workers=args.workers)
    params = {"point": format_point(r1, r2).replace(" ", ","),
              "viewport": ",".join(repr(b) for b in box), "res": f"{w}x{h}",
              "max_iter": args.max_iter}
    if not args.output:
        raise ParseError("render needs --output")
    write_ppm(image, args.output, header("render", params, args.seed).removeprefix("# "))
    return None, EXIT_OK


def cmd_width(args) -> tuple[str, int]:
    cfg = read_config(args.config)
    params = {"config": Path(args.config).name, "n": args.n, "richardson": int(args.richardson)}
    rows = []
    if args.pair:
        i, j = args.pair
        params.update(pair=f"{i},{j}", method=args.method)
        rows.append((f"arc_{i}_{j}", arc_degeneration_pair(cfg, i, j, args.n, args.richardson,
                                                           args.method)))
    if args.mark is not None:
        if not 0 <= args.mark < len(cfg.marks):
            raise ParseError(f"config has no mark {args.mark}")
        mark = cfg.marks[args.mark]
        params.update(mark=args.mark, lam=repr(args.lam))
        res = local_degeneration(cfg, mark.disk, mark.interval, args.lam, args.n,
                                 richardson=args.richardson)
        rows += [(f"W_plus_{args.mark}", res.W_plus), (f"W_sphere_{args.mark}", res.W_sphere)]
    if not rows:
        raise ParseError("width needs --pair or --mark")
    return header("width", params, args.seed) + "\n" + width_csv(rows), EXIT_OK


def _tree_report(t: TreeDynamics) -> str:
    mats = tree_matrices(t)
    v = solve_MvDv(mats.M, mats.D)
    if v is None:
        line = "NO Mv=Dv SOLUTION"
    else:
        line = "Mv=Dv SOLUTION v=" + ",".join(f"{x:.12g}" for x in v)
    return line + "\n" + matrix_csv("M", mats.M) + matrix_csv("D", mats.D)


def cmd_obstruct(args) -> tuple[str, int]:
    obj = read_obstruction_file(args.input)
    head = header("obstruct", {"input": Path(args.input).name}, args.seed) + "\n"
    if isinstance(obj, TreeDynamics):
        return head + _tree_report(obj), EXIT_OK
    v = verdict(obj)
    A = transition_matrix(obj).A
    return head + str(v) + "\n" + matrix_csv("A", A), v.exit_code


def cmd_tree(args) -> tuple[str, int]:
    obj = read_obstruction_file(args.input)
    if isinstance(obj, CurveSystem):
        raise ParseError("expected a tree file, got a curve system")
    return header("tree", {"input": Path(args.input).name}, args.seed) + "\n" + _tree_report(obj), EXIT_OK


def cmd_pulloff(args) -> tuple[str, int]:
    t1, t2 = _angle(args.theta1), _angle(args.theta2)
    N = pulled_off_constant(t1, t2, cap=args.cap)
    params = {"theta1": t1 if isinstance(t1, RotationNumber) else repr(t1),
              "theta2": t2 if isinstance(t2, RotationNumber) else repr(t2), "cap": args.cap}
    out = [header("pulloff", params, args.seed), "N,dist",
           f"{N},{speed_gap(t1, t2)!r}"]
    return "\n".join(out) + "\n", EXIT_OK


def cmd_psd_plan(args) -> tuple[str, int]:
    theta = _rotation(args.theta)
    plan = build_plan(theta, args.KF, args.K, args.M, args.v, args.w, depth=args.depth)
    stab = stability_report(plan)
    params = {"theta": theta, "KF": repr(args.KF), "K": repr(args.K), "M": repr(args.M),
              "v": repr(args.v), "w": repr(args.w), "depth": args.depth}
    k_top = stab.k_m[-1]
    lines = [header("psd-plan", params, args.seed),
             f"# m_F={plan.m_F} near_parabolic={len(plan.near_parabolic_levels)} "
             f"k_-1={k_top} failures={list(plan.failures)}"]
    return "\n".join(lines) + "\n" + plan_csv(plan), EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False, allow_abbrev=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--output", default=None, help="write here instead of stdout")
    common.add_argument("--workers", type=int, default=1, help="threads; never changes output")

    p = _Parser(prog="siegelbounds", add_help=False, allow_abbrev=False,
                description="Combinatorics and numerics around Siegel disks of quadratic maps.")
    p.add_argument("--help", action="help")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, func, help_):
        sp = sub.add_parser(name, parents=[common], add_help=False, allow_abbrev=False, help=help_)
        sp.add_argument("--help", action="help")
        sp.set_defaults(func=func)
        return sp

    sp = add("tiling", cmd_tiling, "diffeo-tiling of level m as CSV")
    sp.add_argument("--theta", required=True)
    sp.add_argument("--m", type=int, required=True)
    sp.add_argument("--c", type=float, default=0.0)

    for name, func, help_ in (("map", cmd_map, "multipliers, fixed and critical points"),
                              ("render", cmd_render, "basin picture as PPM")):
        sp = add(name, func, help_)
        sp.add_argument("--point", default=None, help='"rho1=a+bi rho2=c+di"')
        sp.add_argument("--rho1", default=None)
        sp.add_argument("--rho2", default=None)
        if name == "render":
            sp.add_argument("--viewport", default="-2,2,-2,2")
            sp.add_argument("--res", default="256x256")
            sp.add_argument("--max-iter", type=int, default=200)

    sp = add("width", cmd_width, "extremal widths on a disk configuration")
    sp.add_argument("--config", required=True)
    sp.add_argument("--pair", type=int, nargs=2, default=None)
    sp.add_argument("--mark", type=int, default=None, help="index of a mark line")
    sp.add_argument("--lam", type=float, default=10.0)
    sp.add_argument("--n", type=int, default=256)
    sp.add_argument("--method", choices=["auto", "grid", "closed_form"], default="auto")
    sp.add_argument("--richardson", action=argparse.BooleanOptionalAction, default=True)

    for name, func, help_ in (("obstruct", cmd_obstruct, "Thurston verdict or tree test"),
                              ("tree", cmd_tree, "Mv = Dv test for a tree map")):
        sp = add(name, func, help_)
        sp.add_argument("--input", required=True)

    sp = add("pulloff", cmd_pulloff, "pulled-off constant of the chord model")
    sp.add_argument("--theta1", required=True)
    sp.add_argument("--theta2", required=True)
    sp.add_argument("--cap", type=int, default=100_000)

    sp = add("psd-plan", cmd_psd_plan, "pseudo-Siegel regularization plan as CSV")
    sp.add_argument("--theta", required=True)
    sp.add_argument("--KF", type=float, required=True)
    sp.add_argument("--K", type=float, default=DEFAULT_K)
    sp.add_argument("--M", type=float, default=DEFAULT_M)
    sp.add_argument("--v", type=float, default=DEFAULT_V)
    sp.add_argument("--w", type=float, default=DEFAULT_W)
    sp.add_argument("--depth", type=int, default=DEFAULT_DEPTH)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        text, code = args.func(args)
    except (ParseError, DomainError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SolverDiverged, ConvergenceFailure) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    if text is not None:
        if args.output:
            Path(args.output).write_text(text)
        else:
            sys.stdout.write(text)
    return code


def run():
    sys.exit(main())

