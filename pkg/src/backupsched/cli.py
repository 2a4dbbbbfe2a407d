"""Command-line entry point.

Exit codes: 0 success, 1 constraint or support failure, 2 ill-posed request
or unparseable intent, 3 I/O or format error.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys

import numpy as np

from backupsched import svg
from backupsched.density import (
    periodic_kde,
    raw_kde,
    resolve_bandwidth,
)
from backupsched.intent import ALPHA_TABLES, IntentError, parse_intent
from backupsched.sampler import IllPosedRequest, SupportExhausted, greedy_sample
from backupsched.schedule import (
    IntentParams,
    JobWindow,
    ScheduleFormatError,
    load_schedule,
    max_concurrency,
    parse_schedule,
    validate_request,
    validate_spacing,
)

EXIT_OK, EXIT_CONSTRAINT, EXIT_ILL_POSED, EXIT_IO = 0, 1, 2, 3


def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


def _load(path: str):
    try:
        return load_schedule(path)
    except (OSError, ScheduleFormatError) as exc:
        _err(f"error: cannot read schedule {path}: {exc}")
        return None


def _bandwidth_arg(text: str) -> str | float:
    if text in ("silverman", "scott") or text.startswith("fixed:"):
        if text.startswith("fixed:"):
            float(text.split(":", 1)[1])
        return text
    raise argparse.ArgumentTypeError("expected silverman, scott or fixed:<hours>")


def _density_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--bandwidth", type=_bandwidth_arg, default="silverman",
                   help="silverman | scott | fixed:<hours> (default: silverman)")
    p.add_argument("--grid-size", type=int, default=None,
                   help="grid cells over one period (default: 12 per hour)")
    p.add_argument("--expansion-fraction", type=float, default=None,
                   help="wrap-around margin as a fraction of the period (default: auto)")


def _effective_intent(args) -> tuple[IntentParams, list[str]]:
    params, warnings = IntentParams(), []
    if args.intent:
        params, warnings = parse_intent(args.intent, params, args.alpha_table)
    overrides = {
        "k": args.k, "epsilon": args.epsilon, "alpha": args.alpha, "omega": args.omega,
        "delta": args.delta, "daily_cap": args.cap, "bucket_hours": args.bucket_hours,
        "concurrency_limit": args.concurrency_limit, "asset": args.asset,
    }
    overrides = {key: val for key, val in overrides.items() if val is not None}
    return dataclasses.replace(params, **overrides), warnings


def _table(period, outcome) -> str:
    P = period.period_hours
    lines = [f"{'#':>2}  {'client':<14} {'start':<10} {'end':<10} {'center h':>9}"]
    for i, w in enumerate(outcome.windows, 1):
        lines.append(
            f"{i:>2}  {w.client:<14} {period.label(w.start(P)):<10} "
            f"{period.label(w.end(P)):<10} {w.center:>9.3f}"
        )
    return "\n".join(lines)


def cmd_schedule(args) -> int:
    schedule = _load(args.schedule)
    if schedule is None:
        return EXIT_IO
    try:
        intent, warnings = _effective_intent(args)
    except IntentError as exc:
        _err(f"error: {exc}")
        return EXIT_ILL_POSED
    for w in warnings:
        _err(f"warning: {w}")
    check = validate_request(schedule, intent)
    if not check:
        _err(f"error: ill-posed request: {check.message}")
        return EXIT_ILL_POSED

    density, bandwidth = None, None
    if schedule.n:
        bandwidth = resolve_bandwidth(args.bandwidth, schedule)
        density = periodic_kde(schedule, bandwidth, args.expansion_fraction, args.grid_size)
    history: list = []
    try:
        outcome = greedy_sample(
            density, schedule, intent, args.seed,
            mode=args.mode,
            enforce_concurrency=not args.no_concurrency_mask,
            grid_size=args.grid_size,
            history=history,
        )
    except IllPosedRequest as exc:
        _err(f"error: ill-posed request: {exc}")
        return EXIT_ILL_POSED
    except SupportExhausted as exc:
        _err(f"Unable to proceed: no admissible time left for pick {exc.iteration} "
             f"of {intent.k} ({len(exc.partial.centers)} placed)")
        return EXIT_CONSTRAINT

    doc = outcome.to_dict(schedule.period)
    doc["density"] = {
        "bandwidth_rule": args.bandwidth,
        "bandwidth": bandwidth,
        "expansion_hours": density.expansion if density is not None else None,
        "grid_size": density.grid_size if density is not None else len(history[0]),
    }
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    table = _table(schedule.period, outcome)
    try:
        if args.out and args.out != "-":
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text)
            print(table)
        else:
            sys.stdout.write(text)
            _err(table)
        if args.plot:
            with open(args.plot, "w", encoding="utf-8") as fh:
                fh.write(_schedule_svg(schedule, density, history, outcome))
    except OSError as exc:
        _err(f"error: cannot write output: {exc}")
        return EXIT_IO
    return EXIT_OK


def _schedule_svg(schedule, density, history, outcome) -> str:
    P = schedule.P
    grid = np.arange(len(history[0])) * P / len(history[0])
    curves = [history[0], history[-1]]
    if density is not None:
        curves.append(density.values)
    chart = svg.Chart(P, max(float(np.max(c)) for c in curves),
                      title=f"k={outcome.params.k} alpha={outcome.params.alpha:g}")
    for w in schedule.windows:
        chart.band(w.start(P), w.end(P))
    if density is not None:
        chart.curve(density.grid, density.values, "corrected", "density")
    chart.curve(grid, history[0], "g_before", "preference-before")
    chart.curve(grid, history[-1], "g_after", "preference-after")
    for c in outcome.centers:
        chart.marker(c)
    return chart.render(f"hours from {schedule.period.origin_label}")


def _load_new_windows(path: str, schedule, delta: float) -> list[JobWindow]:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    doc = json.loads(text)
    if isinstance(doc, dict) and "jobs" in doc:
        return list(parse_schedule(text).windows)
    if isinstance(doc, dict) and doc.get("windows") and "center" in doc["windows"][0]:
        return [JobWindow(w.get("client", "new"), float(w["center"]), float(w["width"]))
                for w in doc["windows"]]
    centers = doc["centers"] if isinstance(doc, dict) else doc
    return [JobWindow("new", schedule.period.wrap(float(c)), delta) for c in centers]


def cmd_validate(args) -> int:
    schedule = _load(args.schedule)
    if schedule is None:
        return EXIT_IO
    new: list[JobWindow] = []
    if args.new:
        try:
            new = _load_new_windows(args.new, schedule, args.delta)
        except (OSError, ValueError, KeyError, TypeError, IndexError) as exc:
            _err(f"error: cannot read new windows {args.new}: {exc}")
            return EXIT_IO
    P = schedule.P
    combined = schedule.with_windows(new)
    violations = 0

    peak, witness = max_concurrency(combined)
    limit = args.limit if args.limit is not None else schedule.server_concurrency
    print(f"max concurrency: {peak} at {witness:.3f} h ({schedule.period.label(witness)})")
    if limit is not None:
        if peak > limit:
            violations += 1
            print(f"VIOLATION concurrency {peak} > limit {limit}")
        else:
            print(f"concurrency within limit {limit}")

    if args.spacing is not None:
        groups = {"new": [w.center for w in new]} if new else {}
        if not new:
            for w in schedule.windows:
                groups.setdefault(w.client, []).append(w.center)
        for name, centers in sorted(groups.items()):
            for a, b in validate_spacing(centers, args.spacing, P):
                violations += 1
                print(f"VIOLATION spacing {name}: centers {a:g} and {b:g} closer than {args.spacing:g} h")

    print("windows (center mod P, width, span):")
    for w in combined.windows:
        print(f"  {w.client:<14} {w.center:9.3f} {w.width:7.3f}  "
              f"{schedule.period.label(w.start(P))} -> {schedule.period.label(w.end(P))}")
    print("OK" if violations == 0 else f"{violations} violation(s)")
    return EXIT_OK if violations == 0 else EXIT_CONSTRAINT


def cmd_parse_intent(args) -> int:
    try:
        params, warnings = parse_intent(args.text, IntentParams(), args.alpha_table)
    except IntentError as exc:
        _err(f"error: {exc}")
        return EXIT_ILL_POSED
    for w in warnings:
        _err(f"warning: {w}")
    print(json.dumps(params.to_dict(), indent=2, sort_keys=True))
    return EXIT_OK


def cmd_plot(args) -> int:
    schedule = _load(args.schedule)
    if schedule is None:
        return EXIT_IO
    if schedule.n == 0:
        _err("error: schedule has no windows; nothing to estimate a density from")
        return EXIT_IO
    bandwidth = resolve_bandwidth(args.bandwidth, schedule)
    density = periodic_kde(schedule, bandwidth, args.expansion_fraction, args.grid_size)
    curves = [density.values]
    raw = None
    if args.show_raw:
        raw = raw_kde(schedule, bandwidth, density.grid)
        curves.append(raw)
    chart = svg.Chart(schedule.P, 1.05 * max(float(np.max(c)) for c in curves),
                      title=f"bandwidth {bandwidth:.3f} h")
    for w in schedule.windows:
        chart.band(w.start(schedule.P), w.end(schedule.P))
    chart.curve(density.grid, density.values, "corrected", "density")
    if raw is not None:
        chart.curve(density.grid, raw, "raw", "density-raw")
    try:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(chart.render(f"hours from {schedule.period.origin_label}"))
    except OSError as exc:
        _err(f"error: cannot write {args.out}: {exc}")
        return EXIT_IO
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="backupsched", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("schedule", help="place new windows into an existing schedule")
    p.add_argument("schedule", help="schedule file (.json or .csv)")
    p.add_argument("--intent", help="intent sentence; explicit flags override it")
    p.add_argument("--alpha-table", choices=sorted(ALPHA_TABLES), default="default")
    p.add_argument("-k", "--k", type=int, default=None, help="number of new windows")
    p.add_argument("--epsilon", type=float, default=None, help="minimum center spacing, hours")
    p.add_argument("--alpha", type=float, default=None, help="expected overlap in [0, 1]")
    p.add_argument("--omega", type=float, default=None, help="self-affinity in [0, 1]")
    p.add_argument("--delta", type=float, default=None, help="new window width, hours")
    p.add_argument("--cap", type=int, default=None, help="max new windows per bucket")
    p.add_argument("--bucket-hours", type=float, default=None, help="cap bucket length (24)")
    p.add_argument("--concurrency-limit", type=int, default=None)
    p.add_argument("--no-concurrency-mask", action="store_true",
                   help="do not block times where the server limit would be hit")
    p.add_argument("--asset", default=None, help="client name for the new windows")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=("argmax", "stochastic"), default="argmax")
    p.add_argument("-o", "--out", default="-", help="outcome JSON path (default stdout)")
    p.add_argument("--plot", default=None, help="write an SVG of the run here")
    _density_flags(p)
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("validate", help="check concurrency and spacing")
    p.add_argument("schedule")
    p.add_argument("--new", default=None, help="outcome JSON or schedule file of new windows")
    p.add_argument("--limit", type=int, default=None, help="server concurrency limit")
    p.add_argument("--spacing", type=float, default=None, help="required center spacing")
    p.add_argument("--delta", type=float, default=IntentParams().delta,
                   help="width for new windows given only as centers")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("parse-intent", help="print the parameters read from a sentence")
    p.add_argument("text")
    p.add_argument("--alpha-table", choices=sorted(ALPHA_TABLES), default="default")
    p.set_defaults(func=cmd_parse_intent)

    p = sub.add_parser("plot", help="write an SVG of the periodic density")
    p.add_argument("schedule")
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--show-raw", action="store_true", help="overlay the uncorrected KDE")
    _density_flags(p)
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        _err(f"error: {exc}")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
