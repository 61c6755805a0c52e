"""``pmx`` command line front end.

Exit codes: 0 success, 1 audit failure or reproduction outside tolerance,
2 usage or data error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from pathlib import Path

from . import audits, figures
from .dataset import DataError, ToleranceConfig, load_dataset, menu_key, read_menus, write_choices, write_times
from .entropy import EntropyParams, eval_U_canonical, eval_U_tree
from .estimation import FitConfig, estimate_nested, estimate_r, fit_choice_values, simulate
from .models import (
    LuceHickModel,
    LuceModel,
    NestedLuceHickModel,
    load_model,
    predict_p,
    predict_time,
    predict_time_nested,
    save_model,
)
from .process import ParseError, canonicalize, format_process, leaves, parse_process

log = logging.getLogger("procmix")

LOG_LEVELS = {"quiet": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}


class UsageError(Exception):
    pass


def _setup_logging() -> None:
    name = os.environ.get("PMX_LOG", "quiet").strip().lower() or "quiet"
    if name not in LOG_LEVELS:
        raise UsageError(f"PMX_LOG must be one of {', '.join(LOG_LEVELS)}, got {name!r}")
    logging.basicConfig(level=LOG_LEVELS[name], stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s", force=True)


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _write_table(path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    log.info("wrote %d rows to %s", len(rows), path)


def _tol(args) -> ToleranceConfig:
    return ToleranceConfig(eps_prob=args.eps_prob, eps_ratio=args.eps_ratio, eps_time=args.eps_time)


def _fit_cfg(args) -> FitConfig:
    return FitConfig(r_min=args.r_min, r_max=args.r_max, grid_steps=args.grid, seed=args.seed)


def _data(args, need_times: bool = False):
    if args.choices is None:
        raise UsageError("--choices is required")
    if need_times and args.times is None:
        raise UsageError("--times is required")
    return load_dataset(args.choices, args.times)


# --------------------------------------------------------------------------
# subcommands


def cmd_validate(args) -> int:
    d = _data(args)
    timed = len(d.timed_menus())
    print(f"ok: {len(d.menus)} menus, {len(d.outcomes)} alternatives, {timed} timed menus")
    if args.out:
        rows = [[d.name(m), len(m), repr(d.tau[m]) if m in d.tau else ""] for m in d.menus]
        _write_table(args.out, ["menu_id", "size", "decision_time"], rows)
    return 0


def cmd_check(args) -> int:
    d = _data(args)
    tol = _tol(args)
    reports = audits.run_all(d, tol)
    if args.nested:
        sim = audits.similarity_partition(d, tol)
        reports.append(audits.check_iia_equally_dissimilar(d, sim.classes, tol))
        reports.append(audits.check_dt_independence_equally_dissimilar(d, sim.classes, tol))
    if args.format == "json":
        print(json.dumps([r.to_dict() for r in reports], indent=2))
    else:
        for r in reports:
            print(r.to_text())
    if args.out:
        rows = []
        for r in reports:
            if not r.violations:
                rows.append([r.axiom, "PASS", r.instances, ""])
            rows += [[r.axiom, "FAIL", r.instances, v["detail"]] for v in r.violations]
        _write_table(args.out, ["axiom", "status", "instances", "detail"], rows)
    return 0 if all(r.passed for r in reports) else 1


def cmd_partition(args) -> int:
    d = _data(args)
    sim = audits.similarity_partition(d, _tol(args))
    if args.format == "json":
        print(json.dumps({"classes": [list(c) for c in sim.classes],
                          "insufficient": sim.insufficient,
                          "report": sim.report.to_dict()}, indent=2))
    else:
        for i, cls in enumerate(sim.classes):
            print(f"class {i}: {', '.join(cls)}")
        for x in sim.insufficient:
            print(f"note: {x}")
        print(sim.report.to_text())
    if args.out:
        rows = [[x, i] for i, cls in enumerate(sim.classes) for x in cls]
        _write_table(args.out, ["alternative_id", "class"], rows)
    return 0 if sim.report.passed else 1


def _luce_from_data(d) -> LuceModel:
    # log values from every menu, anchored per connected component
    within, _ = fit_choice_values(d, [tuple(d.outcomes)])
    return LuceModel({x: math.log(w) for x, w in within.items()})


def cmd_fit(args) -> int:
    d = _data(args, need_times=True)
    cfg = _fit_cfg(args)
    if args.nested:
        fit = estimate_nested(d, cfg, _tol(args))
        m = fit.model
        summary = {
            "model": "nested",
            "r": m.r,
            "r_S": {" ".join(c): m.r_S[c] for c in m.partition},
            "partition": [list(c) for c in m.partition],
            "residual_max": fit.residual_max,
            "notes": fit.diagnostics.get("notes", []),
        }
    else:
        res = estimate_r(d, cfg)
        m = LuceHickModel(_luce_from_data(d), res.r_hat, res.time_of_entropy)
        summary = {"model": "luce_hick", **res.to_dict()}
    if args.model:
        save_model(m, args.model)
        log.info("saved model to %s", args.model)
    if args.format == "json":
        print(json.dumps(summary, indent=2))
    elif args.nested:
        print(f"r = {_fmt(summary['r'])}")
        for cat, r_s in summary["r_S"].items():
            print(f"r_S[{cat}] = {_fmt(r_s)}")
        print(f"residual_max = {_fmt(summary['residual_max'])}")
        for note in summary["notes"]:
            print(f"note: {note}")
    else:
        print(f"r = {_fmt(summary['r_hat'])}")
        print(f"violations = {summary['violations']}")
        print("minimizer_set = " + ", ".join(f"[{_fmt(a)}, {_fmt(b)}]" for a, b in summary["minimizer_set"]))
        print(f"residual_max = {_fmt(summary['residual_max'])}")
    if args.out:
        rows = [[k, json.dumps(v)] for k, v in summary.items()]
        _write_table(args.out, ["key", "value"], rows)
    return 0


def _load(args):
    if args.model is None:
        raise UsageError("--model is required")
    try:
        return load_model(args.model)
    except (KeyError, TypeError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read model {args.model}: {exc}") from exc


def _menus(args, m):
    if args.menus is None:
        raise UsageError("--menus is required")
    menus = read_menus(args.menus)
    known = set(m.luce.v) if isinstance(m, LuceHickModel) else set(m.within_v)
    for name, menu in menus:
        unknown = sorted(menu - known)
        if unknown:
            raise DataError(f"menu {name}: alternatives not in the model: {', '.join(unknown)}")
    return menus


def cmd_predict(args) -> int:
    m = _load(args)
    menus = _menus(args, m)
    rows = []
    for name, menu in menus:
        p = predict_p(m, menu)
        t = predict_time_nested(m, menu) if isinstance(m, NestedLuceHickModel) else predict_time(m, menu)
        for x in menu_key(menu):
            rows.append([name, x, p[x], t])
    if args.format == "json":
        print(json.dumps([dict(zip(("menu_id", "alternative_id", "probability", "decision_time"), r))
                          for r in rows], indent=2))
    else:
        for name, x, p, t in rows:
            print(f"{name}\t{x}\t{_fmt(p)}\t{_fmt(t)}")
    if args.out:
        _write_table(args.out, ["menu_id", "alternative_id", "probability", "decision_time"],
                     [[a, b, repr(c), repr(e)] for a, b, c, e in rows])
    return 0


def cmd_simulate(args) -> int:
    m = _load(args)
    menus = _menus(args, m)
    d = simulate(m, menus, args.noise, args.seed)
    if args.out:
        base = Path(args.out)
        stem = base.with_suffix("") if base.suffix == ".csv" else base
        choices = stem.parent / f"{stem.name}_choices.csv"
        times = stem.parent / f"{stem.name}_times.csv"
        with open(choices, "w", newline="", encoding="utf-8") as fh:
            write_choices(d, fh)
        with open(times, "w", newline="", encoding="utf-8") as fh:
            write_times(d, fh)
        print(f"wrote {choices} and {times}")
    else:
        buf = io.StringIO()
        write_choices(d, buf)
        buf.write("\n")
        write_times(d, buf)
        sys.stdout.write(buf.getvalue())
    return 0


def _utilities(pairs: list[str]) -> dict[str, float]:
    util = {}
    for item in pairs:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise UsageError(f"--util expects ID=VAL, got {item!r}")
        try:
            util[key] = float(value)
        except ValueError:
            raise UsageError(f"--util {key}: {value!r} is not a number") from None
    return util


def cmd_eval(args) -> int:
    if args.process is None or args.r is None or args.q is None:
        raise UsageError("eval needs --r, --q and --process")
    params = EntropyParams(args.r, args.q)
    p = parse_process(args.process)
    util = _utilities(args.util)
    missing = sorted(set(leaves(p)) - set(util))
    if missing:
        raise UsageError(f"no --util given for: {', '.join(missing)}")
    value = eval_U_tree(p, util, params)
    if args.format == "json":
        canon = canonicalize(p)
        print(json.dumps({
            "value": value,
            "canonical_value": eval_U_canonical(canon, util, params),
            "process": format_process(p),
        }))
    else:
        print(repr(round(value, 6)))
    if args.out:
        _write_table(args.out, ["process", "r", "q", "value"], [[format_process(p), args.r, args.q, repr(value)]])
    return 0


def cmd_reproduce(args) -> int:
    rep = figures.reproduce(args.figure)
    header = ["menu", "alternatives", "probabilities", "predicted_time", "observed_time", "deviation"]
    rows = []
    for row in rep.rows:
        rows.append([
            row["menu"],
            " ".join(row["alternatives"]),
            " ".join(f"{p:.4f}" for p in row["probabilities"]),
            f"{row['predicted_time']:.4f}",
            f"{row['observed_time']:.4f}",
            f"{row['deviation']:.4f}",
        ])
    if args.format == "json":
        print(json.dumps({"figure": rep.figure, "rows": rep.rows,
                          "max_deviation": rep.max_deviation, "passed": rep.passed}, indent=2))
    else:
        widths = [max(len(str(r[i])) for r in rows + [header]) for i in range(len(header))]
        for r in [header] + rows:
            print("  ".join(str(c).ljust(w) for c, w in zip(r, widths)).rstrip())
        status = "PASS" if rep.passed else "FAIL"
        print(f"{status}: max deviation {rep.max_deviation:.4f} s (tolerance {figures.TOLERANCE} s)")
    if args.out:
        _write_table(args.out, header, rows)
    return 0 if rep.passed else 1


# --------------------------------------------------------------------------
# parser


def _common(p: argparse.ArgumentParser, *groups: str) -> None:
    p.add_argument("--out", metavar="PATH", help="also write the table as CSV")
    p.add_argument("--format", choices=("text", "json"), default="text")
    if "data" in groups:
        p.add_argument("--choices", metavar="PATH")
        p.add_argument("--times", metavar="PATH")
    if "tol" in groups:
        p.add_argument("--eps-prob", type=float, default=ToleranceConfig.eps_prob, metavar="F")
        p.add_argument("--eps-ratio", type=float, default=ToleranceConfig.eps_ratio, metavar="F")
        p.add_argument("--eps-time", type=float, default=ToleranceConfig.eps_time, metavar="F")
    if "fit" in groups:
        p.add_argument("--r-min", type=float, default=FitConfig.r_min, metavar="F")
        p.add_argument("--r-max", type=float, default=FitConfig.r_max, metavar="F")
        p.add_argument("--grid", type=int, default=FitConfig.grid_steps, metavar="N")
        p.add_argument("--seed", type=int, default=0, metavar="N")
    if "model" in groups:
        p.add_argument("--model", metavar="PATH")
        p.add_argument("--menus", metavar="PATH")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pmx", description="Procedural mixtures and Luce-Hick tools.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("validate", help="parse and check choice/time CSV files")
    _common(p, "data")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("check", help="run axiom audits")
    _common(p, "data", "tol")
    p.add_argument("--nested", action="store_true",
                   help="also run the equally-dissimilar variants under the inferred partition")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("partition", help="infer the categorical similarity partition")
    _common(p, "data", "tol")
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("fit", help="estimate r and the time map")
    _common(p, "data", "tol", "fit")
    p.add_argument("--model", metavar="PATH", help="write the fitted model as JSON")
    p.add_argument("--nested", action="store_true", help="fit the nested model")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="predict probabilities and times for menus")
    _common(p, "model")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("simulate", help="simulate a dataset from a model")
    _common(p, "model")
    p.add_argument("--noise", type=float, default=0.0, metavar="F")
    p.add_argument("--seed", type=int, default=0, metavar="N")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("eval", help="evaluate the mixture entropy value of a process")
    _common(p)
    p.add_argument("--r", type=float, metavar="F")
    p.add_argument("--q", type=float, metavar="F")
    p.add_argument("--process", metavar="EXPR")
    p.add_argument("--util", action="append", default=[], metavar="ID=VAL")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("reproduce", help="reproduce a built-in figure table")
    _common(p)
    p.add_argument("figure", help=f"one of {', '.join(figures.FIGURES)}")
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        _setup_logging()
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"pmx: error: {exc}", file=sys.stderr)
        return 2
    except (DataError, ParseError, ValueError, OSError) as exc:
        print(f"pmx: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
