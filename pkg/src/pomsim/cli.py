"""Experiment runner CLI: curve tables, seeded sweeps, paired comparisons."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import load_config
from .errors import ConfigError, PomSimError
from .metrics import compare
from .reward_curve import (
    base_reward,
    calibrate_schedule,
    cutoff_factor,
    reward,
    schedule_from_dict,
)
from .simulator import read_series_csv, run, schedule_max, write_series_csv

EXIT_USAGE = 2
EXIT_INTERNAL = 3


def _emit_curve(schedule, lo, hi, step, out):
    w = csv.writer(out)
    w.writerow(["d", "base", "cutoff_factor", "reward"])
    d = lo
    while d <= hi + 1e-12:
        cf = cutoff_factor(d, schedule.cutoff) if schedule.cutoff else 1.0
        w.writerow(
            [repr(d), repr(base_reward(d, schedule.base)), repr(cf), repr(reward(d, schedule))]
        )
        d += step


def cmd_curve(args) -> int:
    if args.landmarks:
        peak_d, half_d, tenth_d = args.landmarks
        schedule = calibrate_schedule(peak_d, half_d, tenth_d, args.r_max, b_ratio=args.b_ratio)
    else:
        keys = ["a", "b", "scale", "d_co", "spread"]
        vals = args.params
        if len(vals) not in (3, 5):
            print("error: --params needs A B SCALE or A B SCALE D_CO SPREAD", file=sys.stderr)
            return EXIT_USAGE
        schedule = schedule_from_dict(dict(zip(keys, vals)))

    lo, hi = args.range
    if not (lo < hi) or args.step <= 0:
        print(f"error: bad range/step: range=({lo}, {hi}) step={args.step}", file=sys.stderr)
        return EXIT_USAGE

    if args.out:
        with open(args.out, "w", newline="") as f:
            _emit_curve(schedule, lo, hi, args.step, f)
    else:
        _emit_curve(schedule, lo, hi, args.step, sys.stdout)

    if args.landmarks:
        peak_d, half_d, tenth_d = args.landmarks
        d_star, r_max = schedule_max(schedule)
        print(f"# landmark verification (r_max={r_max:.6g} at d={d_star:.6g})", file=sys.stderr)
        print(f"#   I    peak     d={peak_d:<6g} found d_star={d_star:.4f}", file=sys.stderr)
        print(
            f"#   II   half-max d={half_d:<6g} reward/max={reward(half_d, schedule) / r_max:.4f}",
            file=sys.stderr,
        )
        print(
            f"#   III  tenth    d={tenth_d:<6g} reward/max={reward(tenth_d, schedule) / r_max:.4f}",
            file=sys.stderr,
        )
    return 0


def _run_one(config, seed: int, out_dir: str) -> dict:
    cfg = dataclasses.replace(config, seed=seed)
    series = run(cfg)
    run_dir = Path(out_dir) / f"seed_{seed}"
    run_dir.mkdir(parents=True, exist_ok=True)
    write_series_csv(series, run_dir / "blocks.csv")
    summary = {"seed": seed, "config_digest": series.config_digest}
    summary.update(series.summary.to_dict())
    with open(run_dir / "summary.json", "w", encoding="utf-8") as f:
        json.dump(summary, f, indent=2, sort_keys=True)
        f.write("\n")
    return summary


def cmd_run(args) -> int:
    if args.seeds < 1:
        print("error: --seeds must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        config = load_config(args.config)
    except (OSError, ConfigError, PomSimError) as exc:
        print(f"error: cannot load config: {exc}", file=sys.stderr)
        return EXIT_USAGE

    base_seed = args.base_seed if args.base_seed is not None else config.seed
    seeds = list(range(base_seed, base_seed + args.seeds))
    Path(args.out).mkdir(parents=True, exist_ok=True)

    workers = int(os.environ.get("POM_SIM_THREADS", "1"))
    try:
        if workers > 1 and len(seeds) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                summaries = list(pool.map(_run_one, [config] * len(seeds), seeds, [args.out] * len(seeds)))
        else:
            summaries = [_run_one(config, s, args.out) for s in seeds]
    except PomSimError as exc:
        print(f"error: simulation failed: {exc}", file=sys.stderr)
        return EXIT_INTERNAL

    def med(key):
        vals = [s[key] for s in summaries if s.get(key) is not None]
        return float(np.median(vals)) if vals else None

    aggregate = {
        "config_digest": summaries[0]["config_digest"],
        "seeds": seeds,
        "median_mean_hashrate": med("mean_hashrate"),
        "median_mean_interval": med("mean_interval"),
        "median_mean_share": med("mean_share"),
        "median_initial_hashrate": med("initial_hashrate"),
        "median_initial_share": med("initial_large_share"),
        "runs": summaries,
    }
    with open(Path(args.out) / "aggregate.json", "w", encoding="utf-8") as f:
        json.dump(aggregate, f, indent=2, sort_keys=True)
        f.write("\n")
    return 0


def _seed_runs(dir_path: Path) -> dict[int, Path]:
    found = {}
    for sub in sorted(dir_path.glob("seed_*")):
        csv_path = sub / "blocks.csv"
        if csv_path.is_file():
            try:
                found[int(sub.name.split("_", 1)[1])] = csv_path
            except ValueError:
                continue
    return found


def cmd_compare(args) -> int:
    base_dir, treat_dir = Path(args.baseline), Path(args.treatment)
    base_runs = _seed_runs(base_dir)
    treat_runs = _seed_runs(treat_dir)
    if not base_runs or not treat_runs:
        print("error: no seed_*/blocks.csv runs found", file=sys.stderr)
        return EXIT_USAGE
    missing = sorted(set(base_runs) ^ set(treat_runs))
    if missing:
        print(f"error: seed mismatch between directories; unmatched seeds: {missing}", file=sys.stderr)
        return EXIT_USAGE

    rows = []
    for seed in sorted(base_runs):
        base = read_series_csv(base_runs[seed])
        treat = read_series_csv(treat_runs[seed])
        burn_in = args.burn_in if args.burn_in is not None else len(base) // 5
        deltas = compare(base, treat, burn_in)
        rows.append({"seed": seed, **deltas.to_dict()})

    out = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        fields = list(rows[0].keys())
        w = csv.DictWriter(out, fieldnames=fields)
        w.writeheader()
        for row in rows:
            w.writerow({k: (v if k == "seed" else repr(v)) for k, v in row.items()})
        medians = {
            k: float(np.median([r[k] for r in rows])) for k in fields if k != "seed"
        }
        w.writerow({"seed": "median", **{k: repr(v) for k, v in medians.items()}})
    finally:
        if args.out:
            out.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pomsim", description=__doc__)
    p.add_argument("--version", action="version", version=f"pomsim {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    pc = sub.add_parser("curve", help="tabulate the reward curve and verify landmarks")
    group = pc.add_mutually_exclusive_group(required=True)
    group.add_argument(
        "--landmarks",
        nargs=3,
        type=float,
        metavar=("PEAK_D", "HALF_D", "TENTH_D"),
        help="calibrate the schedule from the three landmark difficulties",
    )
    group.add_argument(
        "--params",
        nargs="+",
        type=float,
        metavar="V",
        help="explicit schedule: A B SCALE [D_CO SPREAD]",
    )
    pc.add_argument("--r-max", type=float, default=1.0, help="maximum reward for --landmarks")
    pc.add_argument("--b-ratio", type=float, default=4.0, help="b/a ratio used by calibration")
    pc.add_argument("--range", nargs=2, type=float, default=(0.0, 3.0), metavar=("LO", "HI"))
    pc.add_argument("--step", type=float, default=0.01)
    pc.add_argument("--out", help="write the CSV table here instead of stdout")
    pc.set_defaults(func=cmd_curve)

    pr = sub.add_parser("run", help="run a seeded simulation sweep")
    pr.add_argument("--config", required=True)
    pr.add_argument("--seeds", type=int, default=1, help="number of consecutive seeds")
    pr.add_argument("--base-seed", type=int, default=None, help="first seed (default: config seed)")
    pr.add_argument("--out", required=True, help="output directory")
    pr.set_defaults(func=cmd_run)

    pp = sub.add_parser("compare", help="paired per-seed comparison of two sweep directories")
    pp.add_argument("baseline")
    pp.add_argument("treatment")
    pp.add_argument("--burn-in", type=int, default=None, help="blocks to drop (default: 20%%)")
    pp.add_argument("--out", help="write comparison CSV here instead of stdout")
    pp.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PomSimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
