"""Command-line interface: ``selberg-zeta <verb> [flags]``.

Exit codes: 0 ok, 2 invalid input, 3 table coverage shortfall.  A
``--config`` file of ``key = value`` lines supplies defaults; flags win.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import warnings
from fractions import Fraction
from pathlib import Path

import numpy as np

from .class_numbers import (
    CoverageError,
    class_cycles,
    multiplicity_table,
    narrow_class_number,
    primitive_class_count,
    total_class_count,
)
from .congruence import (
    GroupDescriptor,
    chebotarev_counts,
    check_sets,
    condition_check,
    hat_sets,
    psl2_conjugacy_classes,
    psl2_group_order,
    trace_set,
)
from .io import evaluations_to_csv, table_to_csv
from .quad_core import build_core_index, traces_below_cutoff
from .series import MAX_AUTO_N, log_zeta_euler, log_zeta_strip, mean_square, psi
from .universality import (
    DEFAULT_SCAN_X,
    CompactRegion,
    ConditionWarning,
    PhaseTargetProblem,
    TargetFunction,
    density_report,
    find_shift,
    joint_scan,
    universality_scan,
    weyl_discrepancy,
    zeta_on_region,
)

EXIT_OK, EXIT_USAGE, EXIT_COVERAGE = 0, 2, 3


class UsageError(ValueError):
    pass


def _ints(text: str) -> list[int]:
    return [int(v) for v in str(text).split(",") if v.strip()]


def _floats(text: str) -> list[float]:
    return [float(v) for v in str(text).split(",") if v.strip()]


def _groups(text: str) -> list[GroupDescriptor]:
    return [GroupDescriptor.parse(g) for g in str(text).split(",") if g.strip()]


def _pair(text: str) -> tuple[float, float]:
    vals = _floats(text)
    if len(vals) != 2:
        raise UsageError(f"expected two comma-separated numbers, got {text!r}")
    return vals[0], vals[1]


def _complex(z) -> dict:
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _emit(args, payload, csv_text: str | None = None):
    if args.format == "csv":
        if csv_text is None:
            raise UsageError(f"command {args.command!r} has no CSV output")
        text = csv_text
    else:
        text = json.dumps(payload, indent=2) + "\n"
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)


def _positive(name, v):
    if not (v > 0 and math.isfinite(v)):
        raise UsageError(f"{name} must be positive, got {v}")


# ---------------------------------------------------------------------------
# verbs


def cmd_core_set(args):
    x = args.x
    if x < 3:
        rows = []
    else:
        rows = [(r.n, r.n0, r.k) for r in build_core_index(x).non_core]
    payload = {"x": x, "count": len(rows), "non_core": [dict(n=n, n0=n0, k=k) for n, n0, k in rows]}
    _emit(args, payload, _csv(("n", "n0", "k"), rows))


def cmd_classnum(args):
    if args.D is None and args.n is None:
        raise UsageError("give --D or --n")
    payload = {}
    if args.D is not None:
        cycles = class_cycles(args.D)
        payload.update(D=args.D, h_plus=narrow_class_number(args.D), cycles=[[list(f) for f in c.forms] for c in cycles])
    if args.n is not None:
        m = multiplicity_table(None, max(args.n, 3)).m[args.n]
        payload.update(n=args.n, total=total_class_count(args.n), primitive=primitive_class_count(args.n),
                       m=str(Fraction(m)))
    _emit(args, payload)


def cmd_mult(args):
    group = GroupDescriptor.parse(args.group)
    table = multiplicity_table(group, args.n_max)
    rows = [dict(n=n, p=table.p[n], m=str(Fraction(table.m[n]))) for n in range(3, table.n_max + 1)]
    _emit(args, {"group": group.to_dict(), "n_max": table.n_max, "rows": rows}, table_to_csv(table))


def cmd_traces(args):
    groups = _groups(args.groups)
    out = []
    hats, checks = hat_sets(groups), check_sets(groups)
    for j, (g, h, c) in enumerate(zip(groups, hats, checks), 1):
        out.append({
            "j": j,
            "group": str(g),
            "trace_set": trace_set(g).to_dict(),
            "members": trace_set(g).members(3, args.limit + 1),
            "hat": h.members(3, args.limit + 1),
            "check": c.members(3, args.limit + 1),
        })
    _emit(args, {"limit": args.limit, "groups": out})


def _series_payload(res, sigma, t, route):
    return {"sigma": sigma, "t": t, "route": route, "value": _complex(res.value), "tail_budget": res.tail_budget,
            "terms_used": res.terms_used, "cutoff_x": res.cutoff_x, "budget_kind": "heuristic"}


def cmd_zeta(args):
    group = GroupDescriptor.parse(args.group)
    if args.sigma > 1.0:
        route = "euler"
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            res = log_zeta_euler(group, (args.sigma, args.t), tol=args.tol, table=_table(args, group))
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
    else:
        route = "strip"
        res = log_zeta_strip(group, (args.sigma, args.t), x=args.x, table=_table(args, group, args.x))
    payload = _series_payload(res, args.sigma, args.t, route)
    payload["zeta"] = _complex(np.exp(res.value))
    _emit(args, payload, evaluations_to_csv([(args.sigma, args.t, res)]))


def _table(args, group, x=None):
    n = args.n_max
    if x is not None:
        n = max(n, traces_below_cutoff(x))
    if n > max(args.n_max, MAX_AUTO_N):
        raise CoverageError(f"x={x:g} needs a table to n={n}; raise --n-max to build it")
    return multiplicity_table(group, n)


def cmd_psi(args):
    group = GroupDescriptor.parse(args.group)
    _positive("x", args.x)
    res = psi(group, (args.sigma, args.t), args.x, table=_table(args, group, args.x))
    _emit(args, _series_payload(res, args.sigma, args.t, "psi"), evaluations_to_csv([(args.sigma, args.t, res)]))


def cmd_meansq(args):
    group = GroupDescriptor.parse(args.group)
    res = mean_square(group, args.sigma, args.Y, args.T, step=args.step, table=_table(args, group))
    _emit(args, {"sigma": args.sigma, "Y": args.Y, "T": args.T, "value": res.value, "tail_budget": res.tail_budget,
                 "cutoff": res.cutoff, "step": res.step, "points": res.points})


def _problem(args) -> PhaseTargetProblem:
    traces = _ints(args.traces)
    theta = _floats(args.theta) if args.theta else [0.0] * len(traces)
    return PhaseTargetProblem(tuple(traces), tuple(theta), args.delta)


def cmd_density(args):
    _emit(args, density_report(_problem(args), args.T, args.step))


def cmd_equidist(args):
    traces = _ints(args.traces)
    payload = {"lambda_set": traces, "T": args.T, "discrepancy": None}
    if len(traces) <= 3:
        payload["discrepancy"] = weyl_discrepancy(traces, args.T, args.step)
    if args.delta is not None:
        rep = density_report(_problem(args), args.T, args.step)
        payload.update(delta=rep["delta"], step=rep["step"], measured=rep["measured"], predicted=rep["predicted"])
    _emit(args, payload)


def cmd_shift_find(args):
    tau = find_shift(_problem(args), args.T, args.step)
    _emit(args, {"lambda_set": _ints(args.traces), "delta": args.delta, "T": args.T, "tau": tau})


def _region(args) -> CompactRegion:
    rows, cols = (int(v) for v in _pair(args.grid))
    return CompactRegion(*_pair(args.sigma_range), *_pair(args.t_range), rows, cols)


def _target(text: str, group, region, x, table):
    kind, _, val = text.partition(":")
    if kind == "const":
        return TargetFunction.Constant(complex(val.replace(" ", "")))
    if kind == "planted":
        return TargetFunction.GridSamples(zeta_on_region(group, region, float(val), x, table))
    raise UsageError(f"target must be const:<c> or planted:<tau>, got {text!r}")


def _scan_csv(result):
    return _csv(("tau", "sup_error", "is_record"), [(repr(t), repr(e), 1) for t, e in result.record_history])


def _scan_payload(result):
    return {"best_tau": result.best_tau, "best_error": result.best_error, "samples_evaluated": result.samples_evaluated,
            "step": result.step, "records": [list(r) for r in result.record_history]}


def cmd_scan(args):
    group = GroupDescriptor.parse(args.group)
    region = _region(args)
    table = multiplicity_table(group, max(traces_below_cutoff(args.x), 3))
    target = _target(args.target, group, region, args.x, table)
    res = universality_scan(group, region, target, args.T_max, args.step, args.x, table, threads=args.threads)
    _emit(args, _scan_payload(res), _scan_csv(res))


def cmd_joint_check(args):
    groups = _groups(args.groups)
    res = condition_check(groups)
    hats = hat_sets(groups)
    rows = []
    for j, h in enumerate(hats, 1):
        rows.append({"j": j, "group": str(groups[j - 1]), "hat_empty": h.is_empty(),
                     "witness": res.witnesses[j - 1] if j - 1 < len(res.witnesses) else None})
    if not res.holds:
        print(f"warning: condition fails at j={res.first_failure} (no new core trace)", file=sys.stderr)
    payload = {"groups": [str(g) for g in groups], "holds": res.holds, "first_failure": res.first_failure, "sets": rows}
    if args.T_max is not None:
        region = _region(args)
        items = []
        for g in groups:
            tab = multiplicity_table(g, max(traces_below_cutoff(args.x), 3))
            items.append((g, region, _target(args.target, g, region, args.x, tab)))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConditionWarning)
            scan = joint_scan(items, args.T_max, args.step, args.x, threads=args.threads)
        payload["scan"] = _scan_payload(scan)
    _emit(args, payload)


def cmd_chebotarev(args):
    counts = chebotarev_counts(args.N, args.x)
    classes = psl2_conjugacy_classes(args.N)
    total = sum(counts.values())
    G = psl2_group_order(args.N)
    rows = []
    for i, cls in enumerate(classes):
        c = counts.get(i, 0)
        rows.append({"class": i, "representative": list(cls[0]), "size": len(cls), "count": c,
                     "fraction": c / total if total else None, "expected_fraction": len(cls) / G})
    _emit(args, {"N": args.N, "x": args.x, "total": total, "classes": rows},
          _csv(("class", "size", "count"), [(r["class"], r["size"], r["count"]) for r in rows]))


# ---------------------------------------------------------------------------
# parser


def _add_common(p):
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--output", default=None)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--n-max", dest="n_max", type=int, default=1000)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="selberg-zeta", description=__doc__.splitlines()[0])
    parser.add_argument("--config", default=None, help="key = value file of defaults")
    sub = parser.add_subparsers(dest="command", required=True)

    def verb(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        _add_common(p)
        p.set_defaults(func=fn)
        return p

    p = verb("core-set", cmd_core_set, "non-core traces up to x")
    p.add_argument("--x", type=int, required=True)

    p = verb("classnum", cmd_classnum, "narrow class number of D or class counts at trace n")
    p.add_argument("--D", type=int)
    p.add_argument("--n", type=int)

    p = verb("mult", cmd_mult, "multiplicity table")
    p.add_argument("--group", default="SL2Z")

    p = verb("traces", cmd_traces, "trace sets with new-trace and old-trace sets")
    p.add_argument("--groups", default="SL2Z")
    p.add_argument("--limit", type=int, default=100)

    for name, fn, help_ in (("zeta", cmd_zeta, "log Z(s)"), ("psi", cmd_psi, "smoothed sum psi(s, x)")):
        p = verb(name, fn, help_)
        p.add_argument("--group", default="SL2Z")
        p.add_argument("--sigma", type=float, required=True)
        p.add_argument("--t", type=float, default=0.0)
        p.add_argument("--x", type=float, default=None if name == "zeta" else 1e6)
        p.add_argument("--tol", type=float, default=1e-4)

    p = verb("meansq", cmd_meansq, "mean square of the core tail series")
    p.add_argument("--group", default="SL2Z")
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--Y", type=float, required=True)
    p.add_argument("--T", type=float, required=True)
    p.add_argument("--step", type=float, default=None)

    for name, fn, help_ in (("density", cmd_density, "shift-set density"),
                            ("equidist", cmd_equidist, "phase equidistribution"),
                            ("shift-find", cmd_shift_find, "first shift in the shift set")):
        p = verb(name, fn, help_)
        p.add_argument("--traces", "--n", dest="traces", default="3")
        p.add_argument("--theta", default=None)
        p.add_argument("--delta", type=float, default=None if name == "equidist" else 0.05)
        p.add_argument("--T", type=float, default=1e6)
        p.add_argument("--step", type=float, default=None)

    for name, fn, help_ in (("scan", cmd_scan, "universality shift scan"),
                            ("joint-check", cmd_joint_check, "new-trace condition, optional joint scan")):
        p = verb(name, fn, help_)
        if name == "scan":
            p.add_argument("--group", default="SL2Z")
            p.add_argument("--T-max", dest="T_max", type=float, default=1e3)
        else:
            p.add_argument("--groups", required=True)
            p.add_argument("--T-max", dest="T_max", type=float, default=None)
        p.add_argument("--sigma-range", default="0.87,0.95")
        p.add_argument("--t-range", default="2,4")
        p.add_argument("--grid", default="9,9")
        p.add_argument("--target", default="const:1")
        p.add_argument("--x", type=float, default=DEFAULT_SCAN_X)
        p.add_argument("--step", type=float, default=None)

    p = verb("chebotarev", cmd_chebotarev, "primitive classes per conjugacy class mod N")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--x", type=float, required=True)
    return parser


def read_config(path) -> dict:
    out = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"config line without '=': {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = val
    return out


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    conf = read_config(known.config)
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    for p in sub.choices.values():
        defaults = {}
        for action in p._actions:
            if action.dest in conf:
                val = conf[action.dest]
                defaults[action.dest] = action.type(val) if action.type else val
                # a config value satisfies a required flag
                action.required = False
        p.set_defaults(**defaults)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        _apply_config(parser, argv)
        args = parser.parse_args(argv)
    except (UsageError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        if args.threads < 1:
            raise UsageError("--threads must be >= 1")
        args.func(args)
    except CoverageError as exc:
        print(f"coverage error: {exc}", file=sys.stderr)
        return EXIT_COVERAGE
    except (ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
