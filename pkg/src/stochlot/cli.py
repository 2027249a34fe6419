"""Command-line front end.

    stochlot generate --out testbed.json
    stochlot solve --manifest testbed.json --method sdp --out sdp.json
    stochlot simulate --manifest testbed.json --seed 1 --out results.csv
    stochlot report --results results.csv --pivot table --out table.csv
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import io as sio
from .core import ci_subset, generate_test_bed
from .dynamic_heuristics import TableCoverageError
from .report import box_stats, format_box_stats, format_table, pivot_table
from .sdp import GridTooSmallError
from .sim import (DEPLOYMENTS, LABELS, METHODS, REPLANNABLE, SDP_GRID_STEP, MethodSuite, UsageError,
                  simulate_many)
from .static_dynamic_rs import DEFAULT_SEGMENTS
from .stationary import SearchBoundError

log = logging.getLogger("stochlot")

EXIT_USAGE = 2
EXIT_NUMERIC = 3
NUMERIC_ERRORS = (GridTooSmallError, SearchBoundError, TableCoverageError)


class PrecisionNotReached(RuntimeError):
    pass


def _select(instances, names, subset):
    if subset == "ci":
        instances = ci_subset(instances)
    if names:
        wanted = set(names)
        instances = [i for i in instances if i.name in wanted]
        missing = wanted - {i.name for i in instances}
        if missing:
            raise UsageError(f"unknown instance(s): {', '.join(sorted(missing))}")
    return instances


def cmd_generate(args) -> int:
    sio.atomic_write(args.out, sio.dump_manifest(generate_test_bed()))
    print(f"wrote 216 instances to {args.out}")
    return 0


def cmd_solve(args) -> int:
    if args.method not in METHODS:
        raise UsageError(f"unknown method {args.method!r}; choose from {', '.join(METHODS)}")
    instances = _select(sio.load_manifest(args.manifest), args.instance, args.subset)
    items = []
    for inst in instances:
        suite = MethodSuite(inst, segments=args.segments, grid_step=args.grid_step, cache_dir=args.cache)
        items.append((inst.name, suite.policy(args.method)))
    sio.atomic_write(args.out, sio.dump_policies(args.method, items))
    print(f"wrote {len(items)} {args.method} policies to {args.out}")
    return 0


def run_grid(methods, deployments, explicit: bool):
    runs = []
    for m in methods:
        for d in deployments:
            if d == "replanning" and m not in REPLANNABLE:
                if explicit:
                    raise UsageError(
                        f"re-planning {m!r} is not supported: dynamic-uncertainty (s, S) parameters do "
                        "not depend on the inventory on hand, so re-solving changes nothing")
                continue
            runs.append((m, d))
    return runs


def _simulate_one(job):
    inst, runs, seed, opts = job
    suite = MethodSuite(inst, segments=opts["segments"], grid_step=opts["grid_step"],
                        cache_dir=opts["cache"])
    t0 = time.time()
    reps = simulate_many(inst, runs, seed, suite=suite, max_replications=opts["max_reps"])
    rows = [sio.result_row(inst, r, LABELS[(r.method, r.deployment)]) for r in reps]
    return inst.name, rows, time.time() - t0


def cmd_simulate(args) -> int:
    methods = args.method or list(METHODS)
    deployments = args.deployment or list(DEPLOYMENTS)
    runs = run_grid(methods, deployments, explicit=bool(args.method) and bool(args.deployment))
    for m in methods:
        if m not in METHODS:
            raise UsageError(f"unknown method {m!r}; choose from {', '.join(METHODS)}")
    for d in deployments:
        if d not in DEPLOYMENTS:
            raise UsageError(f"unknown deployment {d!r}")
    instances = _select(sio.load_manifest(args.manifest), args.instance, args.subset)

    out = Path(args.out)
    partial = out.with_name(out.name + ".partial")
    done_rows: dict[str, list[dict]] = {}
    if args.resume and partial.exists():
        for r in sio.read_results(partial):
            done_rows.setdefault(r["instance"], []).append(r)
    todo = [i for i in instances if i.name not in done_rows]
    opts = dict(segments=args.segments, grid_step=args.grid_step, cache=args.cache,
                max_reps=args.max_replications)
    if not (args.resume and partial.exists()):
        partial.parent.mkdir(parents=True, exist_ok=True)
        partial.write_text(sio.format_rows([]))
    jobs = [(inst, runs, args.seed, opts) for inst in todo]
    results = {}
    if args.jobs > 1:
        pool = ProcessPoolExecutor(args.jobs)
        it = pool.map(_simulate_one, jobs)
    else:
        pool, it = None, map(_simulate_one, jobs)
    try:
        for name, rows, secs in it:
            results[name] = rows
            with partial.open("a") as fh:
                fh.write(sio.format_rows(rows, header=False))
            log.info("%s done in %.1fs", name, secs)
    finally:
        if pool is not None:
            pool.shutdown()

    # final file in manifest order, independent of completion order and resumption
    all_rows = []
    for inst in instances:
        rows = results.get(inst.name) or [sio.result_row_from_read(r) for r in done_rows[inst.name]]
        all_rows.extend(rows)
    sio.atomic_write(out, sio.format_rows(all_rows))
    partial.unlink(missing_ok=True)
    print(f"wrote {len(all_rows)} result rows to {out}")
    if any(int(r["precision_reached"]) == 0 for r in all_rows):
        raise PrecisionNotReached("some runs hit the replication ceiling before reaching the precision target")
    return 0


def cmd_report(args) -> int:
    rows = sio.read_results(args.results)
    if not rows:
        raise UsageError(f"{args.results} contains no results")
    try:
        table = pivot_table(rows, args.pivot)
    except ValueError as e:
        raise UsageError(str(e)) from None
    text = format_table(table, f"{sio.REPORT_HEADER} pivot={args.pivot}")
    if args.out:
        sio.atomic_write(args.out, text)
    else:
        sys.stdout.write(text)
    if args.boxplot:
        sio.atomic_write(args.boxplot, format_box_stats(box_stats(rows), f"{sio.REPORT_HEADER} boxplot"))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stochlot", description=__doc__.split("\n")[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write the 216-instance test bed manifest")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    def common(sp):
        sp.add_argument("--manifest", required=True)
        sp.add_argument("--instance", action="append", help="restrict to named instance (repeatable)")
        sp.add_argument("--subset", choices=["all", "ci"], default="all",
                        help="'ci' selects the pinned 36-instance subset")
        sp.add_argument("--segments", type=int, default=DEFAULT_SEGMENTS,
                        help="piecewise-linear segments for the tar method")
        sp.add_argument("--grid-step", type=float, default=SDP_GRID_STEP, help="SDP inventory grid step")
        sp.add_argument("--cache", default=None, help="directory for stationary-table caches")
        sp.add_argument("--out", required=True)

    s = sub.add_parser("solve", help="compute one method's policy for every instance")
    common(s)
    s.add_argument("--method", required=True)
    s.set_defaults(func=cmd_solve)

    m = sub.add_parser("simulate", help="simulate methods under common random numbers")
    common(m)
    m.add_argument("--method", action="append", help=f"one of {', '.join(METHODS)} (repeatable; default all)")
    m.add_argument("--deployment", action="append",
                   help="conventional or replanning (repeatable; default both where valid)")
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--jobs", type=int, default=1)
    m.add_argument("--max-replications", type=int, default=1_000_000)
    m.add_argument("--resume", action="store_true", help="continue from an interrupted run's .partial file")
    m.set_defaults(func=cmd_simulate)

    r = sub.add_parser("report", help="aggregate average optimality gaps")
    r.add_argument("--results", required=True)
    r.add_argument("--pivot", default="table",
                   help="pattern, cv, setup_cost, penalty_cost, all, or table (all pivots stacked)")
    r.add_argument("--out", default=None)
    r.add_argument("--boxplot", default=None, help="also write per-method gap quartiles here")
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, PermissionError, IsADirectoryError) as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except NUMERIC_ERRORS + (PrecisionNotReached,) as e:
        print(f"numeric error: {e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
