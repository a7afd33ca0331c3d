"""Command-line entry point: ``run``, ``sweep`` and ``validate``."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import validation
from .config import RunConfig, config_from_dict, config_to_dict, load_config, load_sweep
from .metrics import Classification, evaluate
from .simulator import ConfigError, RunLog, run, write_trajectory_csv

SEED_ENV = "HERD_SEED"
EXIT_OK, EXIT_ERROR, EXIT_FAILURE = 0, 1, 2
SWEEP_COLUMNS = ["m", "n", "mix", "seed", "l_mu", "l_sigma", "classification"]


def _seed_override(cfg: RunConfig) -> RunConfig:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return cfg
    try:
        seed = int(raw)
    except ValueError:
        raise ConfigError(f"{SEED_ENV}: expected an integer, got {raw!r}") from None
    return dataclasses.replace(cfg, sim=dataclasses.replace(cfg.sim, seed=seed))


def write_plot_data(log: RunLog, path, stride: int = 5) -> None:
    """Reference path, trajectories and per-step selections, decimated like the CSV."""
    ks = np.arange(0, len(log), stride)
    if ks[-1] != len(log) - 1:
        ks = np.r_[ks, len(log) - 1]
    sel = np.full((len(ks), log.n), -1, dtype=int)
    for r, k in enumerate(ks):
        sel[r, : len(log.selected[k])] = log.selected[k]
    np.savez_compressed(
        path,
        t=log.t[ks],
        evaders=log.evaders[ks],
        herders=log.herders[ks],
        ref_position=log.ref_position[ks],
        ref_velocity=log.ref_velocity[ks],
        selected=sel,
        h_norm=log.h_norm[ks],
        exponential=log.exponential,
    )


def cmd_run(config_path, out_dir, stride: int = 5, plots: bool = True) -> int:
    try:
        cfg = _seed_override(load_config(config_path))
        if stride < 1:
            raise ConfigError("stride must be at least 1")
    except (OSError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    os.makedirs(out_dir, exist_ok=True)
    log = run(cfg.sim)
    write_trajectory_csv(log, os.path.join(out_dir, "trajectory.csv"), stride)
    write_plot_data(log, os.path.join(out_dir, "plot_data.npz"), stride)
    with open(os.path.join(out_dir, "config.json"), "w") as fh:
        json.dump(config_to_dict(cfg), fh, indent=2)
    if log.abort_cause:
        print(f"run aborted: {log.abort_cause}", file=sys.stderr)
    report = _report(log, cfg)
    with open(os.path.join(out_dir, "metrics.json"), "w") as fh:
        fh.write(report.to_json() + "\n")
    if plots:
        from .plotting import plot_run

        plot_run(log, out_dir, report.window if len(log) > 1 else None, stride)
    print(report.to_json())
    return EXIT_FAILURE if report.classification is Classification.FAILURE else EXIT_OK


def _report(log: RunLog, cfg: RunConfig):
    from .metrics import MetricReport, MetricsError

    try:
        return evaluate(log, *cfg.window, cfg.thresholds)
    except MetricsError:
        # log too short for the window, e.g. t_end = 0
        return MetricReport(float("nan"), float("nan"), Classification.FAILURE, 0, cfg.window)


def _cell_name(m, n, mix, seed) -> str:
    safe = "".join(ch if ch.isalnum() or ch in ".-" else "_" for ch in mix)
    return f"cell_m{m}_n{n}_{safe}_s{seed}.json"


def run_cell(base: dict, m: int, n: int, mix: str, seed_index: int, out_dir: str) -> dict:
    """One sweep cell; errors become a row with classification 'Error'."""
    data = dict(base, m=m, n=n, model_mix=mix)
    seed = None
    try:
        cfg = _seed_override(config_from_dict(data))
        seed = cfg.sim.seed + seed_index
        cfg = dataclasses.replace(cfg, sim=dataclasses.replace(cfg.sim, seed=seed))
        rep = _report(run(cfg.sim), cfg)
        row = {"m": m, "n": n, "mix": mix, "seed": seed, "l_mu": rep.l_mu, "l_sigma": rep.l_sigma,
               "classification": rep.classification.value}
        body = dict(rep.to_dict(), m=m, n=n, mix=mix, seed=seed)
    except Exception as exc:  # sweep keeps going; the failure is recorded per cell
        row = {"m": m, "n": n, "mix": mix, "seed": seed if seed is not None else seed_index,
               "l_mu": None, "l_sigma": None, "classification": "Error"}
        body = dict(row, error=f"{type(exc).__name__}: {exc}")
    body = {k: (None if isinstance(v, float) and not np.isfinite(v) else v) for k, v in body.items()}
    with open(os.path.join(out_dir, _cell_name(m, n, mix, row["seed"])), "w") as fh:
        json.dump(body, fh, indent=2, sort_keys=True)
    return row


def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and not np.isfinite(v)):
        return ""
    return f"{v:.6e}" if isinstance(v, float) else str(v)


def write_sweep_csv(rows: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(SWEEP_COLUMNS)
        for r in rows:
            wr.writerow([_fmt(r[c]) for c in SWEEP_COLUMNS])


def cmd_sweep(spec_path, out_dir, jobs: int = 1, plots: bool = True) -> int:
    try:
        spec = load_sweep(spec_path)
        if jobs < 1:
            raise ConfigError("jobs must be at least 1")
    except (OSError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    os.makedirs(out_dir, exist_ok=True)
    cells = list(spec.cells())
    args = [(spec.base, m, n, mix, s, out_dir) for m, n, mix, s in cells]
    if jobs == 1:
        rows = [run_cell(*a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(run_cell, *zip(*args)))
    write_sweep_csv(rows, os.path.join(out_dir, "results.csv"))
    if plots:
        from .plotting import plot_sweep_grid

        plot_sweep_grid(rows, os.path.join(out_dir, "grid.png"))
    for r in rows:
        print(",".join(_fmt(r[c]) for c in SWEEP_COLUMNS))
    return EXIT_ERROR if any(r["classification"] == "Error" for r in rows) else EXIT_OK


def cmd_validate(checks=None) -> int:
    checks = validation.run_all() if checks is None else checks
    for c in checks:
        print(c.line())
    ok = all(c.passed for c in checks)
    print("all properties pass" if ok else "some properties FAIL")
    return EXIT_OK if ok else EXIT_ERROR


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="herding", description="Herding simulation with implicit control.")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="simulate one configuration")
    r.add_argument("--config", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--stride", type=int, default=5, help="write every k-th step (default 5)")
    r.add_argument("--no-plots", action="store_true")
    s = sub.add_parser("sweep", help="run an (m, n, mix, seed) grid")
    s.add_argument("--spec", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--no-plots", action="store_true")
    sub.add_parser("validate", help="run the built-in property checks")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        return cmd_run(args.config, args.out, args.stride, not args.no_plots)
    if args.command == "sweep":
        return cmd_sweep(args.spec, args.out, args.jobs, not args.no_plots)
    return cmd_validate()


if __name__ == "__main__":
    sys.exit(main())
