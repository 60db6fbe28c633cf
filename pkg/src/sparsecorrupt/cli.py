"""Command-line interface: ``sparsecorrupt <command> ...``.

Exit codes: 0 ok, 2 usage error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import guarantees as g
from .dictionary import (ConvergenceError, CoherenceProfile, coherence_profile, parse_spec,
                         two_onb_profile, unitary_pair_profile)
from .montecarlo import SweepGrid, curve_csv, run_sweep, threshold_curve
from .presets import PRESETS, build_preset
from .signals import load_instance, make_instance, save_instance
from .solvers import (Mode, RankDeficientError, recover_both_known, solve_l0_exhaustive,
                      solve_l1)

OUT_ENV = "SPARSECORRUPT_OUT"
EXIT_USAGE = 2
EXIT_NUMERICAL = 3

CASES = {
    "1b": (True, True, True, False), "1c": (True, True, True, True),
    "2b": (False, True, True, False), "2c": (True, False, True, False),
    "2d": (False, True, True, True), "3b": (False, False, True, False),
    "3c": (False, False, True, True),
}


class UsageError(Exception):
    pass


def _int(text: str) -> int:
    value = float(text)
    if not value.is_integer():
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    return int(value)


def _int_list(text: str) -> list[int]:
    try:
        return [_int(t) for t in text.split(",") if t.strip()]
    except (ValueError, argparse.ArgumentTypeError):
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _dict_arg(args, flag):
    spec = getattr(args, flag)
    try:
        return parse_spec(spec)
    except ValueError as exc:
        raise UsageError(f"--{flag}: {exc}") from None


def _emit(text: str, out: str | None, default_name: str) -> None:
    target = out
    if target is None and os.environ.get(OUT_ENV):
        target = str(Path(os.environ[OUT_ENV]) / default_name)
    if target is None:
        sys.stdout.write(text)
        return
    Path(target).parent.mkdir(parents=True, exist_ok=True)
    Path(target).write_text(text)
    print(target)


def _json(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


# -- shared argument groups -----------------------------------------------------

def _add_scenario(p, programs=("pinv", "l0", "l1")):
    grp = p.add_argument_group("scenario")
    grp.add_argument("--case", choices=sorted(CASES), help="shortcut for the four flags below")
    for flag in ("x-known", "e-known", "x-random", "e-random"):
        grp.add_argument(f"--{flag}", action="store_true")
    if programs:
        grp.add_argument("--program", choices=programs, default=None)


def _scenario(args) -> g.Scenario:
    if args.case:
        xk, ek, xr, er = CASES[args.case]
    else:
        xk, ek, xr, er = args.x_known, args.e_known, args.x_random, args.e_random
    program = args.program
    if program is None:
        program = "pinv" if xk and ek else "l1"
    try:
        return g.Scenario(xk, ek, xr, er, g.Program(program))
    except ValueError as exc:
        raise UsageError(f"--program: {exc}") from None


def _add_profile(p):
    grp = p.add_argument_group("profile (dictionaries, preset, or symbolic numbers)")
    grp.add_argument("--a", help="dictionary spec for A, e.g. dft:64")
    grp.add_argument("--b", help="dictionary spec for B, e.g. identity:64")
    grp.add_argument("--profile", choices=["unitary", "two-onb", "two-onb-swapped"])
    grp.add_argument("--m", type=float)
    for flag in ("n-a", "n-b"):
        grp.add_argument(f"--{flag}", type=float)
    for flag in ("mu-a", "mu-b", "mu-m", "norm-a", "norm-b", "norm-ab"):
        grp.add_argument(f"--{flag}", type=float)


def _profile(args) -> CoherenceProfile:
    if args.a or args.b:
        if not (args.a and args.b):
            raise UsageError("--a and --b must be given together")
        da, db = _dict_arg(args, "a"), _dict_arg(args, "b")
        try:
            return coherence_profile(da, db)
        except ValueError as exc:
            raise UsageError(f"--b: {exc}") from None
    if args.m is None:
        raise UsageError("give --a/--b, or --m (optionally with --profile or symbolic values)")
    if args.m < 2:
        raise UsageError("--m must be at least 2")
    base = {"unitary": unitary_pair_profile, "two-onb": two_onb_profile,
            "two-onb-swapped": lambda m: two_onb_profile(m).swapped()}[args.profile or "unitary"](args.m)
    fields = base.to_dict()
    for flag in ("n_a", "n_b"):
        if getattr(args, flag) is not None:
            fields[flag] = int(getattr(args, flag))
    for flag in ("mu_a", "mu_b", "mu_m", "norm_a", "norm_b", "norm_ab"):
        if getattr(args, flag) is not None:
            fields[flag] = getattr(args, flag)
    try:
        return CoherenceProfile(**fields)
    except ValueError as exc:
        raise UsageError(f"profile: {exc}") from None


def _add_beta(p):
    grp = p.add_mutually_exclusive_group()
    grp.add_argument("--beta", type=float)
    grp.add_argument("--beta-rule", choices=[r.value for r in g.BetaRule])


def _beta(args, program: g.Program, m: float) -> float:
    if args.beta is not None:
        if not args.beta > 0:
            raise UsageError("--beta must be positive")
        return args.beta
    return g.resolve_beta(args.beta_rule or g.default_beta_rule(program), m)


# -- commands ---------------------------------------------------------------------

def cmd_coherence(args) -> int:
    da, db = _dict_arg(args, "a"), _dict_arg(args, "b")
    if da.m != db.m:
        raise UsageError(f"--b: row count {db.m} differs from --a row count {da.m}")
    _emit(_json(coherence_profile(da, db).to_dict()), args.out, "coherence.json")
    return 0


def cmd_guarantee(args) -> int:
    scenario = _scenario(args)
    profile = _profile(args)
    beta = _beta(args, scenario.program, profile.m)
    try:
        res = g.check_guarantee(scenario, profile, g.SparsityPoint(args.nx, args.ne, beta))
    except g.BetaFloorError as exc:
        raise UsageError(f"--beta: {exc}") from None
    out = res.to_dict()
    out.update(beta=beta, nx=args.nx, ne=args.ne, profile=profile.to_dict())
    _emit(_json(out), args.out, "guarantee.json")
    return 0


def cmd_max_nx(args) -> int:
    scenario = _scenario(args)
    profile = _profile(args)
    beta = _beta(args, scenario.program, profile.m)
    if args.ne_values is not None:
        rows = threshold_curve(scenario, profile, args.ne_values, beta)
        _emit(curve_csv(rows, ["ne", "max_nx"]), args.out, "max_nx.csv")
        return 0
    out = {"ne": args.ne, "beta": beta,
           "max_nx": g.max_recoverable_nx(scenario, profile, args.ne, beta)}
    try:
        out["closed_form"] = g.closed_form_max_nx(scenario, profile, args.ne, beta)
    except ValueError:
        out["closed_form"] = None
    _emit(_json(out), args.out, "max_nx.json")
    return 0


def cmd_figure(args) -> int:
    out_dir = Path(args.out or os.environ.get(OUT_ENV) or "figures")
    out_dir.mkdir(parents=True, exist_ok=True)
    files = []
    for name, header, rows in build_preset(args.preset, args.points):
        path = out_dir / f"{name}.csv"
        path.write_text(curve_csv(rows, header))
        files.append(str(path))
    print(_json({"preset": args.preset, "files": files}), end="")
    return 0


_RECOVER_MODES = {"bp-es": Mode.ES, "bp-xs": Mode.XS, "bp-c": Mode.C}


def _support_arg(text, truth, flag):
    if text is None:
        return None
    if text == "true":
        return truth
    try:
        return np.array(_int_list(text), dtype=int)
    except argparse.ArgumentTypeError as exc:
        raise UsageError(f"--{flag}: {exc}") from None


def cmd_recover(args) -> int:
    da, db = _dict_arg(args, "a"), _dict_arg(args, "b")
    prog = args.program
    if prog == "pinv" and (args.support_x is None or args.support_e is None):
        raise UsageError("--program pinv requires --support-x and --support-e")
    if prog == "bp-es" and args.support_e is None:
        raise UsageError("--program bp-es requires --support-e")
    if prog == "bp-xs" and args.support_x is None:
        raise UsageError("--program bp-xs requires --support-x")

    if args.instance:
        inst, _ = load_instance(args.instance)
    else:
        x_known = prog == "pinv" or prog == "bp-xs" or (prog == "l0-exhaustive" and args.support_x is not None)
        e_known = prog == "pinv" or prog == "bp-es" or (prog == "l0-exhaustive" and args.support_e is not None)
        program = g.Program.PSEUDOINVERSE if x_known and e_known else (
            g.Program.L0 if prog == "l0-exhaustive" else g.Program.L1)
        scenario = g.Scenario(x_known, e_known, args.x_random, args.e_random, program)
        if not 0 <= args.nx <= da.n:
            raise UsageError(f"--nx: {args.nx} outside [0, {da.n}]")
        if not 0 <= args.ne <= db.n:
            raise UsageError(f"--ne: {args.ne} outside [0, {db.n}]")
        inst = make_instance(da, db, scenario, args.nx, args.ne, args.seed)
        if args.save_instance:
            save_instance(inst, args.save_instance, {"a": args.a, "b": args.b})

    sx = _support_arg(args.support_x, inst.support_x, "support-x")
    se = _support_arg(args.support_e, inst.support_e, "support-e")
    truth = dict(x_true=inst.x_true, e_true=inst.e_true, success_tol=args.success_tol)
    if prog == "pinv":
        rep = recover_both_known(da, db, inst.z, sx, se, **truth)
    elif prog == "l0-exhaustive":
        mode = Mode.ES if se is not None and sx is None else Mode.XS if sx is not None and se is None else Mode.C
        k = args.l0_max if args.l0_max is not None else inst.nx + inst.ne
        try:
            rep = solve_l0_exhaustive(da, db, inst.z, k, mode, sx, se, **truth)
        except ValueError as exc:
            raise UsageError(f"--l0-max: {exc}") from None
    else:
        rep = solve_l1(da, db, inst.z, _RECOVER_MODES[prog], sx, se, **truth)
    out = rep.to_dict(vectors=args.vectors)
    out.update(seed=inst.seed, support_x=inst.support_x.tolist(), support_e=inst.support_e.tolist(),
               support_x_hat=np.flatnonzero(np.abs(rep.x_hat) > 1e-8).tolist(),
               support_e_hat=np.flatnonzero(np.abs(rep.e_hat) > 1e-8).tolist())
    _emit(_json(out), args.out, "recover.json")
    return 0


def cmd_sweep(args) -> int:
    scenario = _scenario(args)
    da, db = _dict_arg(args, "a"), _dict_arg(args, "b")
    for v in args.nx:
        if not 0 <= v <= da.n:
            raise UsageError(f"--nx: {v} outside [0, n_a={da.n}]")
    for v in args.ne:
        if not 0 <= v <= db.n:
            raise UsageError(f"--ne: {v} outside [0, n_b={db.n}]")
    beta = args.beta if args.beta is not None else (g.BetaRule(args.beta_rule) if args.beta_rule else None)
    grid = SweepGrid(args.a, args.b, scenario, args.nx, args.ne, args.trials, args.seed,
                     args.success_tol, beta)
    if args.workers < 1:
        raise UsageError("--workers must be at least 1")
    _emit(run_sweep(grid, args.workers).to_csv(), args.out, "sweep.csv")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sparsecorrupt",
                                     description="Recovery guarantees and solvers for z = A x + B e.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("coherence", help="coherence profile of a dictionary pair")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_coherence)

    p = sub.add_parser("guarantee", help="evaluate the recovery guarantee at one point")
    _add_scenario(p)
    _add_profile(p)
    _add_beta(p)
    p.add_argument("--nx", type=_int, required=True)
    p.add_argument("--ne", type=_int, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_guarantee)

    p = sub.add_parser("max-nx", help="largest guaranteed nx for given ne")
    _add_scenario(p)
    _add_profile(p)
    _add_beta(p)
    grp = p.add_mutually_exclusive_group(required=True)
    grp.add_argument("--ne", type=_int)
    grp.add_argument("--ne-values", type=_int_list)
    p.add_argument("--out")
    p.set_defaults(func=cmd_max_nx)

    p = sub.add_parser("figure", help="emit the curve CSVs of a figure preset")
    p.add_argument("preset", choices=list(PRESETS))
    p.add_argument("--out", help="output directory")
    p.add_argument("--points", type=_int, default=40)
    p.set_defaults(func=cmd_figure)

    p = sub.add_parser("recover", help="generate (or load) an instance and run a program")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--program", required=True,
                   choices=["pinv", "bp-es", "bp-xs", "bp-c", "l0-exhaustive"])
    p.add_argument("--x-random", action="store_true")
    p.add_argument("--e-random", action="store_true")
    p.add_argument("--nx", type=_int, default=0)
    p.add_argument("--ne", type=_int, default=0)
    p.add_argument("--seed", type=_int, default=0)
    p.add_argument("--support-x", help="comma-separated indices, or 'true' for the planted support")
    p.add_argument("--support-e", help="comma-separated indices, or 'true' for the planted support")
    p.add_argument("--instance", help="instance JSON written by --save-instance")
    p.add_argument("--save-instance")
    p.add_argument("--l0-max", type=_int)
    p.add_argument("--success-tol", type=float, default=1e-5)
    p.add_argument("--vectors", action="store_true", help="include recovered vectors")
    p.add_argument("--out")
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("sweep", help="Monte-Carlo sweep over a sparsity grid (CSV)")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    _add_scenario(p)
    _add_beta(p)
    p.add_argument("--nx", type=_int_list, required=True)
    p.add_argument("--ne", type=_int_list, required=True)
    p.add_argument("--trials", type=_int, default=10)
    p.add_argument("--seed", type=_int, default=0)
    p.add_argument("--success-tol", type=float, default=1e-5)
    p.add_argument("--workers", type=_int, default=1, help="processes for independent cells")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except (ConvergenceError, RankDeficientError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return 0


if __name__ == "__main__":
    sys.exit(main())
