"""Command line front end.

Verbs:
  run <scenario-file>     simulate one scenario file
  preset <name>           run a named experiment preset (fig1, fig2, fig5,
                          fig8, fig11, heterogeneous-load, fig10-sweep,
                          robustness)
  sweep <scenario-file>   vary one parameter over values x seeds
  analytics <curve>       emit an analytic curve table (fig3, fig6, fig7)

Common flags: --seed, --out-dir (default $ACKPOLICE_OUT_DIR or .),
--duration, --measurement-mode, --no-policing.  Exit codes: 0 ok,
2 configuration error, 3 runtime failure.
"""

import argparse
import os
import sys

from . import presets as presets_mod
from . import traces
from .dcf import DomainError, FixedPointError
from .presets import (ANALYTIC_PRESETS, ROBUSTNESS_COLUMNS, SIM_PRESETS,
                      fig10_base, robustness_grid, sweep)
from .scenario import ScenarioError, parse_scenario, with_overrides
from .sim import Simulation

EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _out_dir(args):
    path = args.out_dir or os.environ.get("ACKPOLICE_OUT_DIR") or "."
    os.makedirs(path, exist_ok=True)
    return path


def _load_scenario(path):
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())


def _apply_overrides(cfg, args):
    return with_overrides(
        cfg, seed=args.seed, duration_s=args.duration,
        measurement_mode=args.measurement_mode,
        policing_enabled=False if args.no_policing else None)


def _run_one(cfg, out_dir, stem):
    trace = Simulation(cfg).run()
    paths = traces.write_trace(trace, out_dir, stem)
    summary = {r["station"]: r for r in trace.summary_rows}
    for sid in sorted(summary):
        row = summary[sid]
        print(f"{stem} {sid}: attempt_rate={row['attempt_rate']:.5f} "
              f"throughput={row['throughput_bps'] / 1e6:.3f}Mb/s "
              f"goodput={row['goodput_bps'] / 1e6:.3f}Mb/s")
    return paths


def cmd_run(args):
    cfg = _apply_overrides(_load_scenario(args.scenario), args)
    stem = os.path.splitext(os.path.basename(args.scenario))[0]
    paths = _run_one(cfg, _out_dir(args), stem)
    print("wrote", " ".join(sorted(paths.values())))
    return 0


def cmd_preset(args):
    out_dir = _out_dir(args)
    name = args.name
    if name in ANALYTIC_PRESETS:
        fn, columns = ANALYTIC_PRESETS[name]
        rows = fn()
        path = os.path.join(out_dir, f"{name}.csv")
        traces.write_csv(path, columns, rows)
        print("wrote", path)
        return 0
    if name == "robustness":
        rows = robustness_grid()
        path = os.path.join(out_dir, "robustness.csv")
        traces.write_csv(path, ROBUSTNESS_COLUMNS, rows)
        print("wrote", path)
        return 0
    if name == "fig10-sweep":
        seeds = list(range(1, args.sweep_seeds + 1))
        for policing in (False, True):
            base = fig10_base(duration_s=args.duration or 180.0,
                              policing=policing)
            rows, agg = sweep(base, "n_fair", list(range(1, 8)), seeds,
                              workers=args.workers)
            tag = "policing" if policing else "nopolicing"
            traces.write_csv(os.path.join(out_dir, f"fig10_{tag}.csv"),
                             traces.SWEEP_COLUMNS, rows)
            traces.write_csv(os.path.join(out_dir, f"fig10_{tag}_agg.csv"),
                             traces.SWEEP_AGG_COLUMNS, agg)
        print("wrote fig10 sweep CSVs to", out_dir)
        return 0
    if name not in SIM_PRESETS:
        known = sorted(list(SIM_PRESETS) + list(ANALYTIC_PRESETS)
                       + ["robustness", "fig10-sweep"])
        raise ScenarioError(f"unknown preset {name!r}; known: {', '.join(known)}")
    builds = SIM_PRESETS[name](seed=args.seed if args.seed is not None else 1,
                               duration_s=args.duration) \
        if args.duration else SIM_PRESETS[name](
            seed=args.seed if args.seed is not None else 1)
    for run_name, cfg in builds:
        if args.measurement_mode or args.no_policing:
            cfg = _apply_overrides(cfg, argparse.Namespace(
                seed=None, duration=None,
                measurement_mode=args.measurement_mode,
                no_policing=args.no_policing))
        _run_one(cfg, out_dir, run_name)
    return 0


def cmd_sweep(args):
    cfg = _apply_overrides(_load_scenario(args.scenario), args)
    values = [_coerce(v) for v in args.values.split(",")]
    seeds = [int(s) for s in args.seeds.split(",")]
    rows, agg = sweep(cfg, args.axis, values, seeds, workers=args.workers)
    out_dir = _out_dir(args)
    stem = os.path.splitext(os.path.basename(args.scenario))[0]
    traces.write_csv(os.path.join(out_dir, f"{stem}_sweep.csv"),
                     traces.SWEEP_COLUMNS, rows)
    traces.write_csv(os.path.join(out_dir, f"{stem}_sweep_agg.csv"),
                     traces.SWEEP_AGG_COLUMNS, agg)
    print(f"wrote {stem}_sweep.csv and {stem}_sweep_agg.csv to {out_dir}")
    return 0


def cmd_analytics(args):
    if args.curve not in ANALYTIC_PRESETS:
        raise ScenarioError(
            f"unknown curve {args.curve!r}; known: {', '.join(sorted(ANALYTIC_PRESETS))}")
    fn, columns = ANALYTIC_PRESETS[args.curve]
    rows = fn()
    path = os.path.join(_out_dir(args), f"{args.curve}.csv")
    traces.write_csv(path, columns, rows)
    print("wrote", path)
    return 0


def _coerce(text):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            continue
    if text in ("true", "false"):
        return text == "true"
    return text


def build_parser():
    parser = argparse.ArgumentParser(prog="ackpolice", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="verb", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--out-dir", default=None)
        p.add_argument("--duration", type=float, default=None,
                       help="override duration_s")
        p.add_argument("--measurement-mode", choices=("oracle", "realistic"),
                       default=None)
        p.add_argument("--no-policing", action="store_true")

    p = sub.add_parser("run", help="run a scenario file")
    p.add_argument("scenario")
    common(p)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("preset", help="run a named experiment preset")
    p.add_argument("name")
    common(p)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--sweep-seeds", type=int, default=10,
                   help="seed count for fig10-sweep")
    p.set_defaults(fn=cmd_preset)

    p = sub.add_parser("sweep", help="sweep one parameter of a scenario")
    p.add_argument("scenario")
    p.add_argument("--axis", required=True)
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--seeds", required=True, help="comma-separated seeds")
    p.add_argument("--workers", type=int, default=1)
    common(p)
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("analytics", help="emit an analytic curve table")
    p.add_argument("curve")
    p.add_argument("--out-dir", default=None)
    p.set_defaults(fn=cmd_analytics)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ScenarioError, DomainError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FixedPointError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
