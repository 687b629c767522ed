"""Command-line front end: ``averaging-jets jet|solve|verify|reproduce|catalog``.

Exit codes: 0 ok, 1 reproduction failure or invariant violation, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .engine import MissingPerturbation, averaging_jet
from .polar import DEFAULT_ORDER_CAP, PerturbedSystem, catalog, catalog_names, conditions, generic_perturbation, \
    parse_system
from .ring import ParseError, parse_poly
from .solver import SolveObstruction, Substitution, generic_rank, parse_script, solve_vanishing

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


# -- shared helpers -------------------------------------------------------------

def _bindings(items) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"binding {item!r} must look like name=value")
        k, v = item.split("=", 1)
        try:
            out[k.strip()] = parse_poly(v)
        except ParseError as exc:
            raise UsageError(f"binding {item!r}: {exc}") from exc
    return out


def _load_system(args) -> PerturbedSystem:
    if args.system_file:
        text = Path(args.system_file).read_text()
        try:
            s = parse_system(text, name=Path(args.system_file).stem)
        except ValueError as exc:
            raise UsageError(f"{args.system_file}: {exc}") from exc
        if args.bind:
            s = s.substitute(_bindings(args.bind))
        return s
    if not args.system:
        raise UsageError("give --system NAME or --system-file PATH")
    try:
        return catalog(args.system, _bindings(args.bind))
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from exc


def _with_perturbations(s: PerturbedSystem, order: int, degree: int | None, zero: bool) -> PerturbedSystem:
    from .polar import PlanarPoly
    for i in range(1, order + 1):
        if s.perturbation(i) is not None:
            continue
        if zero:
            s = s.with_perturbation(i, PlanarPoly(), PlanarPoly())
        else:
            s = generic_perturbation(s, i, degree)
    return s


def _script(args, s: PerturbedSystem):
    """Substitution from --apply files, --conditions and --set; assumptions from --assume."""
    sub = Substitution({}, "")
    nonzero, zero = [], []
    defs = dict(s.definitions)
    for path in args.apply or []:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise UsageError(f"cannot read {path}: {exc}") from exc
        try:
            sc, nz, z = parse_script(text, defs)
        except ValueError as exc:
            raise UsageError(f"{path}: {exc}") from exc
        sub = sub.compose(sc)
        nonzero += nz
        zero += z
    if getattr(args, "conditions", False):
        try:
            sub = sub.compose(Substitution(conditions(s), "stored conditions"))
        except KeyError as exc:
            raise UsageError(str(exc.args[0])) from exc
    if getattr(args, "set", None):
        sub = sub.compose(Substitution(_bindings(args.set), "command line"))
    for a in getattr(args, "assume", None) or []:
        try:
            _, nz, z = parse_script("assume " + a.replace("!=", " != "), defs)
        except ValueError as exc:
            raise UsageError(f"--assume {a!r}: {exc}") from exc
        nonzero += nz
        zero += z
    # linear zero-assumptions become bindings of their first family parameter
    for z in zero:
        sub = sub.compose(_solve_relation(z))
    return sub, nonzero


def _solve_relation(z):
    from .ring import ParamName, collect_linear, NonLinearError
    names = sorted((n for n in z.variables() if n != "pi"), key=lambda n: ParamName(n).sort_key())
    for n in names:
        try:
            co, rem = collect_linear(z, [n])
        except NonLinearError:
            continue
        c = co.get(n)
        if c is not None and c.is_constant():
            return Substitution({n: -rem / c.constant_value()}, f"assume {z} = 0")
    raise UsageError(f"cannot eliminate the relation {z} = 0: no variable occurs linearly with a constant coefficient")


def _emit(report: dict, args, text: str):
    if not args.quiet:
        print(text)
    if args.json:
        payload = json.dumps(report, indent=2, sort_keys=True)
        if args.json == "-":
            print(payload)
        else:
            Path(args.json).write_text(payload + "\n")


def _report(s: PerturbedSystem, bindings=None) -> dict:
    return {
        "system": s.name,
        "bindings": {k: str(v) for k, v in sorted((bindings if bindings is not None else s.family).items())},
        "jet": None,
        "substitutions": [],
        "rank": None,
        "numeric": {"profiles": [], "slopes": [], "counts": []},
        "provenance": {"targets": []},
    }


def _pretty(p, definitions) -> str:
    """Show ``p`` as ``c * name`` when it is a constant-times-pi multiple of a named definition."""
    for name, dp in definitions.items():
        try:
            q = p.divexact(dp)
        except (ArithmeticError, ValueError):
            continue
        if set(q.variables()) <= {"pi"}:
            return f"({q})*{name}"
    return str(p)


def _parse_orders(text: str | None, j: int, parity_odd=True) -> list:
    if not text:
        return list(range(1, j + 1, 2)) if parity_odd else list(range(1, j + 1))
    try:
        return [int(t) for t in text.replace(" ", "").split(",") if t]
    except ValueError as exc:
        raise UsageError(f"bad coefficient list {text!r}") from exc


def _grid(text: str) -> list:
    try:
        if ":" in text:
            a, b, st = (float(t) for t in text.split(":"))
            return [float(x) for x in np.arange(a, b + st / 2, st)]
        return [float(t) for t in text.split(",") if t]
    except ValueError as exc:
        raise UsageError(f"bad grid {text!r}; use start:stop:step or a comma list") from exc


def _values(args, s: PerturbedSystem) -> dict:
    vals = {}
    if args.values:
        try:
            data = json.loads(Path(args.values).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot load values from {args.values}: {exc}") from exc
        vals.update({k: float(v) for k, v in data.items()})
    for item in args.param or []:
        if "=" not in item:
            raise UsageError(f"--param {item!r} must look like name=value")
        k, v = item.split("=", 1)
        try:
            vals[k.strip()] = float(parse_poly(v).to_float())
        except (ParseError, ValueError) as exc:
            raise UsageError(f"--param {item!r}: {exc}") from exc
    return vals


# -- subcommands ----------------------------------------------------------------

def cmd_catalog(args) -> int:
    if args.name:
        try:
            s = catalog(args.name)
        except KeyError as exc:
            raise UsageError(str(exc.args[0])) from exc
        lines = [str(s)]
        if s.params:
            lines.append(f"  family parameters: {', '.join(s.params)}")
        try:
            conds = conditions(generic_perturbation(s, 1))
            lines.append("  first-order conditions:")
            lines += [f"    {k} = {v}" for k, v in conds.items()]
        except KeyError:
            pass
        print("\n".join(lines))
    else:
        for n in catalog_names():
            s = catalog(n)
            print(f"{n:4s} xdot = {s.P};  ydot = {s.Q}")
    return EXIT_OK


def cmd_jet(args) -> int:
    s = _load_system(args)
    if args.j > args.cap:
        raise UsageError(f"jet order {args.j} exceeds the cap {args.cap}")
    s = _with_perturbations(s, args.order, args.degree, args.zero)
    sub, _ = _script(args, s)
    s = s.substitute(sub.bindings) if len(sub) else s
    try:
        jet = averaging_jet(s, args.order, args.j, cap=args.cap)
    except MissingPerturbation as exc:
        raise UsageError(str(exc)) from exc
    report = _report(s)
    report["jet"] = jet.to_dict()
    if len(sub):
        report["substitutions"].append(sub.to_dict())
    _emit(report, args, str(jet))
    return EXIT_OK


def cmd_solve(args) -> int:
    s = _load_system(args)
    s = _with_perturbations(s, args.order, args.degree, False)
    sub, nonzero = _script(args, s)
    s = s.substitute(sub.bindings) if len(sub) else s
    jet = averaging_jet(s, args.order, args.j, cap=args.cap)
    report = _report(s)
    report["jet"] = jet.to_dict()
    if len(sub):
        report["substitutions"].append(sub.to_dict())
    lines = []
    status = EXIT_OK
    if args.unknowns:
        orders = _parse_orders(args.orders, args.j)
        unknowns = [u.strip() for u in args.unknowns.split(",") if u.strip()]
        try:
            sol = solve_vanishing(jet, orders, unknowns, nonzero)
            d = sol.to_dict()
            d["determinant"] = _pretty(sol.determinant, s.definitions)
            report["substitutions"].append(d)
            lines.append(f"solution of m{args.order},{{{','.join(map(str, orders))}}} = 0:")
            lines += [f"  {k} = {v}" for k, v in sol.bindings.items()]
            lines.append(f"  determinant: {_pretty(sol.determinant, s.definitions)}")
            jet = jet.substitute(sol.bindings)
        except SolveObstruction as exc:
            det = _pretty(exc.determinant, s.definitions) if exc.determinant is not None else None
            report["substitutions"].append({"obstruction": str(exc), "determinant": det})
            lines.append(f"obstruction: {exc}")
            if exc.determinant is not None:
                lines.append(f"  determinant: {det}")
            status = EXIT_FAIL
    if not jet.is_zero() and args.order == 1:
        rk = generic_rank(jet, _parse_orders(args.rank_orders, args.j))
        report["rank"] = rk.to_dict()
        lines.append(f"rank {rk.rank} of {rk.rows}x{rk.cols}; cycle bound {rk.bound}")
    elif jet.is_zero():
        lines.append(f"M{args.order}^[{args.j}] vanishes identically")
        report["rank"] = {"rank": 0, "bound": 0}
    _emit(report, args, "\n".join(lines))
    return status


def cmd_verify(args) -> int:
    from .numeric import (NumericBinding, count_cycles, displacement_profile, epsilon_order_check,
                          melnikov_line_integral, IntegrationFailure, NonReturn)
    lines = []
    if args.construct:
        from .constructions import construct_cycles
        try:
            c = construct_cycles(args.construct)
        except KeyError as exc:
            raise UsageError(str(exc.args[0])) from exc
        s, vals = c.system, c.values
        lines.append(f"constructed point for {s.name}: predicted radii {c.predicted}")
        lines.append("  " + ", ".join(f"{k}={v:.6g}" for k, v in vals.items() if v))
    else:
        s = _load_system(args)
        s = _with_perturbations(s, 2 if args.mode == "slope2" else 1, args.degree, False)
        sub, _ = _script(args, s)
        s = s.substitute(sub.bindings) if len(sub) else s
        vals = _values(args, s)
        missing = [p for p in s.perturbation_parameters() if p not in vals]
        for p in missing:
            vals[p] = 0.0
    report = _report(s)
    report["numeric"]["values"] = vals
    grid = _grid(args.r_grid)
    status = EXIT_OK
    if args.mode in ("profile", "cycles"):
        eps = args.eps[0]
        b = NumericBinding(vals, eps, args.rtol, args.atol)
        prof = displacement_profile(s, b, grid)
        if len(prof.r) < len(grid):
            lines.append(f"profile stopped at r = {grid[len(prof.r)]}: orbit does not return")
        if args.csv:
            prof.to_csv(args.csv)
        report["numeric"]["profiles"].append({"eps": eps, "r": prof.r, "d": prof.d, "err": prof.err,
                                              "flag": prof.flags})
        cc = count_cycles(prof, s if args.mode == "cycles" else None)
        report["numeric"]["counts"].append(cc.to_dict())
        lines.append(f"eps = {eps}: {cc.count} certified sign changes at {cc.radii}")
        if cc.uncertain:
            lines.append(f"  uncertain brackets: {cc.uncertain}")
        if args.expect_count is not None and cc.count != args.expect_count:
            status = EXIT_FAIL
    elif args.mode in ("slope1", "slope2"):
        i = 1 if args.mode == "slope1" else 2
        jet = averaging_jet(s, i, args.j)
        if i == 1:
            fit = epsilon_order_check(s, vals, args.eps, grid, lambda r, e: e * jet.evaluate(r, vals), 2)
        else:
            fit = epsilon_order_check(s, vals, args.eps, grid, lambda r, e: e * e * jet.evaluate(r, vals) / 2, 3)
        report["numeric"]["slopes"].append({"expected": fit.expected, "radii": fit.radii, "slopes": fit.slopes})
        lines.append(f"slopes {fit.slopes}; median {fit.slope} (expected {fit.expected})")
    elif args.mode == "melnikov":
        vals_ = []
        for r in grid:
            try:
                vals_.append(melnikov_line_integral(s, vals, r))
            except (IntegrationFailure, NonReturn) as exc:
                lines.append(f"r = {r}: {exc}")
                status = EXIT_FAIL
                vals_.append(None)
        report["numeric"]["melnikov"] = {"r": grid, "integral": vals_}
        lines += [f"r = {r:.6g}: {v:.6e}" for r, v in zip(grid, vals_) if v is not None]
        if args.tol is not None and any(v is None or abs(v) > args.tol for v in vals_):
            status = EXIT_FAIL
    _emit(report, args, "\n".join(lines))
    return status


def cmd_reproduce(args) -> int:
    from .targets import SCENARIOS, run_scenario
    if args.list or not args.target:
        for sid, sc in SCENARIOS.items():
            print(f"{sid:22s} {sc.title}")
        return EXIT_OK if args.list else EXIT_USAGE
    ids = list(SCENARIOS) if args.target == ["all"] else args.target
    unknown = [t for t in ids if t not in SCENARIOS]
    if unknown:
        raise UsageError(f"unknown target(s) {', '.join(unknown)}; see 'reproduce --list'")
    ledger = []
    status = EXIT_OK
    for sid in ids:
        checks, secs = run_scenario(sid)
        ok = all(c.ok for c in checks)
        if not ok:
            status = EXIT_FAIL
        print(f"{'PASS' if ok else 'FAIL'} {sid} ({secs:.1f}s)")
        for c in checks:
            print(f"  {c.status:11s} {c.name}" + (f": {c.detail}" if c.detail else ""))
        ledger.append({"target": sid, "ok": ok, "checks": [c.to_dict() for c in checks]})
    if args.json:
        Path(args.json).write_text(json.dumps({"provenance": {"targets": ledger}}, indent=2, sort_keys=True) + "\n")
    return status


# -- parser ---------------------------------------------------------------------

def _system_args(p):
    p.add_argument("--system", help="catalog name (LV, H, CR1, S1..S4)")
    p.add_argument("--system-file", help="system definition file")
    p.add_argument("--bind", action="append", metavar="NAME=VALUE", help="family parameter binding")
    p.add_argument("--degree", type=int, default=None, help="degree of generic perturbations (default: system degree)")


def _script_args(p):
    p.add_argument("--apply", action="append", metavar="FILE", help="substitution/assumption script")
    p.add_argument("--conditions", action="store_true", help="apply the stored first-order vanishing conditions")
    p.add_argument("--set", action="append", metavar="NAME=EXPR", help="extra binding")
    p.add_argument("--assume", action="append", metavar="REL", help="assumption, e.g. 'd!=0' or 'alpha+3*gamma=0'")


def _out_args(p):
    p.add_argument("--json", metavar="PATH", help="write the JSON report ('-' for stdout)")
    p.add_argument("--quiet", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="averaging-jets", description="Jets of averaging functions of planar centers.")
    ap.add_argument("--version", action="version", version=__version__)
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("catalog", help="list built-in centers")
    p.add_argument("name", nargs="?")
    p.set_defaults(func=cmd_catalog)

    p = sub.add_parser("jet", help="compute M_i^[j]")
    _system_args(p)
    _script_args(p)
    _out_args(p)
    p.add_argument("--order", type=int, choices=(1, 2), default=1)
    p.add_argument("--j", type=int, required=True)
    p.add_argument("--cap", type=int, default=DEFAULT_ORDER_CAP)
    p.add_argument("--zero", action="store_true", help="use zero perturbations")
    p.set_defaults(func=cmd_jet)

    p = sub.add_parser("solve", help="solve vanishing conditions and report ranks")
    _system_args(p)
    _script_args(p)
    _out_args(p)
    p.add_argument("--order", type=int, choices=(1, 2), default=1)
    p.add_argument("--j", type=int, required=True)
    p.add_argument("--cap", type=int, default=DEFAULT_ORDER_CAP)
    p.add_argument("--orders", help="coefficients to annihilate, e.g. 1,3 (default: odd k <= j)")
    p.add_argument("--unknowns", help="comma list of parameters to solve for")
    p.add_argument("--rank-orders", help="coefficients for the rank report (default: odd k <= j)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="numeric checks")
    _system_args(p)
    _script_args(p)
    _out_args(p)
    p.add_argument("--mode", choices=("profile", "cycles", "slope1", "slope2", "melnikov"), default="profile")
    p.add_argument("--construct", choices=("LV", "S4"), help="use a built-in two-cycle parameter point")
    p.add_argument("--values", metavar="JSON", help="parameter values file")
    p.add_argument("--param", action="append", metavar="NAME=VALUE")
    p.add_argument("--eps", type=float, nargs="+", default=[1e-2])
    p.add_argument("--r-grid", default="0.05:0.45:0.025")
    p.add_argument("--j", type=int, default=9)
    p.add_argument("--rtol", type=float, default=1e-12)
    p.add_argument("--atol", type=float, default=1e-15)
    p.add_argument("--csv", metavar="PATH")
    p.add_argument("--tol", type=float, default=None, help="fail if any |line integral| exceeds this")
    p.add_argument("--expect-count", type=int, default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("reproduce", help="run registered reproduction scenarios")
    p.add_argument("target", nargs="*")
    p.add_argument("--list", action="store_true")
    p.add_argument("--json", metavar="PATH")
    p.set_defaults(func=cmd_reproduce)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
