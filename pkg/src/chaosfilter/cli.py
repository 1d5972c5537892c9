"""Experiment driver: precompute, simulate, filter, compare, sweep.

Run as `python -m chaosfilter <subcommand>`.  Exit codes: 0 on success,
2 on validation failure (bad config, inconsistent metadata), 1 on
runtime error.  Output CSV columns are documented in docs/formats.md;
all commands are deterministic given identical inputs.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .config import ConfigError, load_config
from .experiments import build_pipeline, check_consistency, make_table, run_sweep, simulate_full
from .propagator import load_table, save_table
from .reference import compare_on_path, kalman_bucy
from .runtime import (cut_windows, read_observations, run_filter, write_estimate_csv,
                      write_observations, write_state_csv)
from .simulate import write_truth


def _cmd_precompute(args) -> int:
    cfg = load_config(args.config)
    pipe = build_pipeline(cfg)
    table = make_table(pipe)
    save_table(args.out, table, binary=args.binary)
    print(f"wrote {len(table.indices)} index blocks to {args.out}")
    return 0


def _cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    if args.seed_override is not None:
        cfg.seed = args.seed_override
    pipe = build_pipeline(cfg)
    times, X, Y = simulate_full(cfg, pipe, cfg.paths)
    stride = int(round(cfg.resolved_delta_obs() / cfg.resolved_delta_sim()))
    os.makedirs(args.out, exist_ok=True)
    for p in range(cfg.paths):
        obs = os.path.join(args.out, f"obs_{p:03d}.txt")
        tru = os.path.join(args.out, f"truth_{p:03d}.txt")
        write_observations(obs, cfg.resolved_delta_obs(), times[::stride], Y[p, ::stride])
        write_truth(tru, times[::stride], X[p, ::stride])
    print(f"wrote {cfg.paths} path(s) to {args.out}")
    return 0


def _cmd_filter(args) -> int:
    cfg = load_config(args.config)
    table = load_table(args.table)
    delta_obs, r, times, values = read_observations(args.obs)
    os.makedirs(args.out, exist_ok=True)
    state_csv = os.path.join(args.out, "states.csv")
    est_csv = os.path.join(args.out, "estimates.csv")
    if times.size == 0:
        with open(state_csv, "w", newline="\n") as fh:
            fh.write("t," + ",".join(f"p_{j + 1}" for j in range(table.K)) + "\n")
        with open(est_csv, "w", newline="\n") as fh:
            fh.write("t,estimate,mass\n")
        print("no samples; wrote header-only CSVs")
        return 0
    check_consistency(cfg, table, delta_obs, r)
    pipe = build_pipeline(cfg)
    windows = cut_windows(times, values, cfg.delta)
    run = run_filter(table, pipe.tbasis, pipe.p_init, windows,
                     f_coeffs=pipe.f_coeffs, one_coeffs=pipe.one_coeffs)
    write_state_csv(state_csv, run)
    write_estimate_csv(est_csv, run)
    print(f"filtered {len(windows)} windows; wrote {state_csv} and {est_csv}")
    return 0


def _read_estimate_csv(path):
    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return rows[:, 0], rows[:, 1]


def _cmd_compare(args) -> int:
    cfg = load_config(args.config)
    pipe = build_pipeline(cfg)
    if pipe.bundle.linear is None:
        raise ConfigError(f"model.name: no exact oracle for '{cfg.model_name}'")
    delta_obs, _, times, values = read_observations(args.obs)
    est_t, est = _read_estimate_csv(args.est)
    means, _ = kalman_bucy(pipe.bundle.linear, values[:, 0], delta_obs)
    stride = int(round(cfg.delta / delta_obs))
    oracle_t, oracle = times[::stride], means[::stride]
    if oracle.size != est.size:
        raise ConfigError(f"estimate rows ({est.size}) do not match windows ({oracle.size})")
    summary = compare_on_path(est, oracle, est_t, oracle_t)
    os.makedirs(args.out, exist_ok=True)
    per_time = os.path.join(args.out, "compare.csv")
    with open(per_time, "w", newline="\n") as fh:
        fh.write("t,estimate,oracle,error\n")
        for t, e, o in zip(est_t, est, oracle):
            fh.write(f"{t:.17g},{e:.17g},{o:.17g},{e - o:.17g}\n")
    summary_path = os.path.join(args.out, "summary.csv")
    with open(summary_path, "w", newline="\n") as fh:
        fh.write("rmse,max_abs\n")
        fh.write(f"{summary.rmse:.17g},{summary.max_abs:.17g}\n")
    print(f"rmse={summary.rmse:.6g} max={summary.max_abs:.6g}; wrote {summary_path}")
    return 0


def _cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    if not values:
        raise ConfigError("sweep.values: no values given")
    typed = [float(v) if args.axis == "delta" else int(v) for v in values]
    rows = run_sweep(cfg, args.axis, typed)
    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, f"sweep_{args.axis}.csv")
    keys = list(rows[0].keys())
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(keys) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row.get(k)) for k in keys) + "\n")
    for row in rows:
        print(f"{args.axis}={row['value']}: rmse={row['rmse']:.6g}")
    print(f"wrote {path}")
    return 0


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="chaosfilter", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("precompute", help="assemble matrices and write the propagator table")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--binary", action="store_true")
    p.set_defaults(fn=_cmd_precompute)

    p = sub.add_parser("simulate", help="simulate signal/observation paths to replay files")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed-override", type=int, default=None)
    p.set_defaults(fn=_cmd_simulate)

    p = sub.add_parser("filter", help="run the online recursion over an observation file")
    p.add_argument("--config", required=True)
    p.add_argument("--table", required=True)
    p.add_argument("--obs", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_filter)

    p = sub.add_parser("compare", help="score an estimate CSV against the exact oracle")
    p.add_argument("--config", required=True)
    p.add_argument("--obs", required=True)
    p.add_argument("--est", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_compare)

    p = sub.add_parser("sweep", help="re-run the benchmark along one knob")
    p.add_argument("--config", required=True)
    p.add_argument("--axis", required=True, choices=["K", "N", "n", "delta"])
    p.add_argument("--values", required=True, help="comma-separated values")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_sweep)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:   # runtime failure: report the stage and fail with 1
        print(f"error [{args.command}]: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
