"""Command line front end.

Subcommands:

  profile     run a plant's steady profiling workload, write a knob
              system file full of samples
  synthesize  read a knob system file plus a goal file, fill in the
              synthesized controller section
  run         run one scenario under one mode, write trace and summary CSVs
  sweep       run a range of static settings, report the best safe one
  compare     cross modes with seeds, one CSV row per run plus aggregates

Exit codes: 0 on success, 2 on usage errors (argparse), 3 on scenario,
synthesis, or file errors. Constraint violations during a run are
results, not errors; they never change the exit code.
"""

from __future__ import annotations

import argparse
import numbers
import os
import sys

from . import harness
from .errors import KnobError
from .harness import parse_mode
from .profiling import synthesize
from .scenarios import make_scenario, scenario_names
from .sysfiles import (
    parse_goal_file,
    parse_knob_sys,
    serialize_knob_sys,
    write_atomic,
)

SUMMARY_COLUMNS = ("scenario", "mode", "seed", "ticks", "violations", "throughput_cum", "mean_abs_error")
SWEEP_COLUMNS = ("value", "violations", "throughput_cum")
COMPARE_COLUMNS = ("mode", "seed", "violations", "throughput_cum", "mean_abs_error")


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, numbers.Integral):
        return str(int(value))
    return format(float(value), ".10g")


def _csv_text(header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def _write_csv(path, header, rows):
    write_atomic(path, _csv_text(header, rows))


def _read_text(path) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _parse_float_list(text: str, flag: str):
    values = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            values.append(float(part))
        except ValueError:
            raise KnobError(f"{flag}: bad number {part!r}") from None
    if not values:
        raise KnobError(f"{flag}: no values given")
    return values


def _parse_range(text: str):
    """a:b:step, endpoints inclusive (up to float wobble on the last step)."""
    parts = text.split(":")
    if len(parts) != 3:
        raise KnobError(f"--range wants a:b:step, got {text!r}")
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise KnobError(f"--range wants numbers in a:b:step, got {text!r}") from None
    if step <= 0:
        raise KnobError(f"--range step must be positive, got {step!r}")
    if stop < start:
        raise KnobError(f"--range is backwards: {text!r}")
    count = int((stop - start) / step + 1e-9) + 1
    return [start + i * step for i in range(count)]


def _parse_seeds(text: str):
    """Either a:b (python-range semantics, b excluded) or a comma list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 2:
            raise KnobError(f"--seeds wants a:b or a comma list, got {text!r}")
        try:
            start, stop = int(parts[0]), int(parts[1])
        except ValueError:
            raise KnobError(f"--seeds wants integers, got {text!r}") from None
        if stop <= start:
            raise KnobError(f"--seeds range is empty: {text!r}")
        return list(range(start, stop))
    try:
        seeds = [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise KnobError(f"--seeds wants integers, got {text!r}") from None
    if not seeds:
        raise KnobError("--seeds: no values given")
    return seeds


def _load_scenario(args):
    overrides = _read_text(args.overrides) if getattr(args, "overrides", None) else None
    return make_scenario(args.scenario, overrides)


def cmd_profile(args) -> int:
    settings = _parse_float_list(args.settings, "--settings") if args.settings else None
    sys_file = harness.profile_plant(args.plant, settings, args.reps, args.seed)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, f"{sys_file.conf_name}.SmartConf.sys")
    write_atomic(path, serialize_knob_sys(sys_file))
    print(f"{path}: {len(sys_file.samples)} samples")
    return 0


def cmd_synthesize(args) -> int:
    sys_file = parse_knob_sys(_read_text(args.sys))
    goals = parse_goal_file(_read_text(args.goals))
    if sys_file.metric not in goals.entries:
        raise KnobError(f"no goal for metric {sys_file.metric}")
    entry = goals.entries[sys_file.metric]
    report = synthesize(sys_file.samples, entry.goal, entry.hard)
    sys_file.synthesized = report
    out = args.out if args.out else args.sys
    write_atomic(out, serialize_knob_sys(sys_file))
    print(
        f"{out}: alpha={_fmt(report.alpha)} delta={_fmt(report.delta)} "
        f"lambda={_fmt(report.lambda_)} pole={_fmt(report.pole)} "
        f"virtual_goal={_fmt(report.virtual_goal)}"
    )
    return 0


def cmd_run(args) -> int:
    scenario = _load_scenario(args)
    mode = parse_mode(args.mode)
    result = harness.run_scenario(scenario, mode, args.seed, args.ticks)
    os.makedirs(args.out, exist_ok=True)
    for conf_name, rows in result.traces.items():
        _write_csv(
            os.path.join(args.out, f"trace-{conf_name}.csv"),
            harness.TRACE_COLUMNS,
            rows,
        )
    summary_row = (
        result.scenario,
        result.mode,
        result.seed,
        result.ticks,
        result.summary.violations,
        result.summary.throughput_cum,
        result.summary.mean_abs_error,
    )
    _write_csv(os.path.join(args.out, "summary.csv"), SUMMARY_COLUMNS, [summary_row])
    print(
        f"{result.scenario} {result.mode} seed={result.seed}: "
        f"violations={result.summary.violations} "
        f"throughput_cum={_fmt(result.summary.throughput_cum)} "
        f"mean_abs_error={_fmt(result.summary.mean_abs_error)}"
    )
    return 0


def cmd_sweep(args) -> int:
    scenario = _load_scenario(args)
    values = _parse_range(args.range)
    result = harness.sweep(scenario, values, args.seed, args.ticks)
    rows = [(v, result.violations[v], result.throughput[v]) for v in result.values]
    text = _csv_text(SWEEP_COLUMNS, rows)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        write_atomic(os.path.join(args.out, "sweep.csv"), text)
    sys.stdout.write(text)
    if result.best_static is None:
        print("best_static,none")
    else:
        print(f"best_static,{_fmt(result.best_static)}")
    return 0


def cmd_compare(args) -> int:
    scenario = _load_scenario(args)
    modes = [parse_mode(m.strip()) for m in args.modes.split(",") if m.strip()]
    if not modes:
        raise KnobError("--modes: no values given")
    seeds = _parse_seeds(args.seeds)
    rows = harness.compare(scenario, modes, seeds, args.ticks)
    aggregates = []
    for mode in sorted(modes, key=str):
        mode_rows = [r for r in rows if r[0] == str(mode)]
        aggregates.append(
            (
                str(mode),
                "all",
                sum(r[2] for r in mode_rows),
                sum(r[3] for r in mode_rows) / len(mode_rows),
                sum(r[4] for r in mode_rows) / len(mode_rows),
            )
        )
    text = _csv_text(COMPARE_COLUMNS, list(rows) + aggregates)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        write_atomic(os.path.join(args.out, "compare.csv"), text)
    sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="autoknob",
        description="Synthesize feedback controllers for performance knobs and run them on simulated subsystems.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("profile", help="collect profiling samples from a plant")
    p.add_argument("--plant", required=True, choices=sorted(harness.PLANT_PROFILES))
    p.add_argument("--settings", help="comma-separated knob settings (plant default otherwise)")
    p.add_argument("--reps", type=int, default=20, help="samples per setting (default 20)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="directory for the <ConfName>.SmartConf.sys file")
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("synthesize", help="fill the synthesized section of a knob system file")
    p.add_argument("--sys", required=True, help="knob system file with samples")
    p.add_argument("--goals", required=True, help="goal file naming the knob's metric")
    p.add_argument("--out", help="write here instead of rewriting --sys in place")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("run", help="run one scenario under one mode")
    p.add_argument("--scenario", required=True, help=f"one of: {', '.join(scenario_names())}")
    p.add_argument("--mode", default="smartconf", help="smartconf | static:<value> | single-pole | no-virtual-goal")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ticks", type=int, help="override the scenario's run length")
    p.add_argument("--overrides", help="file of key = value lines patching plant constants or ticks")
    p.add_argument("--out", required=True, help="directory for trace-<conf>.csv and summary.csv")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="try static settings, report the best that never violates")
    p.add_argument("--scenario", required=True)
    p.add_argument("--range", required=True, help="a:b:step, endpoints inclusive")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ticks", type=int)
    p.add_argument("--overrides")
    p.add_argument("--out", help="also write sweep.csv here")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="cross modes with seeds")
    p.add_argument("--scenario", required=True)
    p.add_argument("--modes", required=True, help="comma-separated mode list")
    p.add_argument("--seeds", required=True, help="a:b (b excluded) or a comma list")
    p.add_argument("--ticks", type=int)
    p.add_argument("--overrides")
    p.add_argument("--out", help="also write compare.csv here")
    p.set_defaults(func=cmd_compare)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except KnobError as exc:
        print(f"autoknob: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"autoknob: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
