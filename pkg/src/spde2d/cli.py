"""Command-line interface.

Subcommands: ``simulate`` (observation-grid dump), ``estimate`` (single
dataset to a JSON report), ``mc`` (field Monte Carlo), ``ou-mc``
(small-noise OU Monte Carlo), and ``paths`` (fixed-coordinate cross-section
dumps).  Exit codes: 0 success, 2 configuration error, 3 experiment failed.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .config import build_ou_config, build_spde_config, load_config
from .errors import ConfigurationError
from .harness import (
    ExperimentFailed,
    estimate_dataset,
    experiment_failed,
    run_ou_replicates,
    run_replicates,
    summarize,
    write_replicates_csv,
    write_summary_json,
)
from .simulate import dump_surface_csv, load_surface_csv, simulate_dataset

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FAILED = 3


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spde2d", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, data: bool = False):
        if data:
            p.add_argument("data", help="surface CSV produced by 'simulate'")
        p.add_argument("--config", required=True, help="flat key-value config file")
        p.add_argument("--seed", type=int, default=None, help="override run.seed")
        p.add_argument("--out", required=True, help="output directory (or file for 'estimate')")
        p.add_argument("--threads", type=int, default=None, help="override run.threads")

    common(sub.add_parser("simulate", help="simulate one dataset and dump the surface CSV"))
    common(sub.add_parser("estimate", help="estimate parameters from a surface CSV"), data=True)
    common(sub.add_parser("mc", help="field-experiment Monte Carlo"))
    common(sub.add_parser("ou-mc", help="small-noise OU Monte Carlo"))
    common(sub.add_parser("paths", help="cross-section dumps at fixed t, y, or z"))
    return ap


def _simulate_grid(cfg, seed=None):
    return simulate_dataset(cfg.params, cfg.noise, cfg.xi, cfg.epsilon,
                            cfg.n_obs, cfg.m1, cfg.m2, cfg.truncation,
                            cfg.seed if seed is None else seed)


def cmd_simulate(args) -> int:
    cfg = build_spde_config(load_config(args.config), seed_override=args.seed,
                            threads_override=args.threads)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    grid = _simulate_grid(cfg)
    dump_surface_csv(grid, outdir / "surface.csv")
    print(f"wrote {outdir / 'surface.csv'} "
          f"(N={grid.n_time}, M1={grid.m_space[0]}, M2={grid.m_space[1]}, K={grid.truncation_kmax})")
    return EXIT_OK


def cmd_estimate(args) -> int:
    cfg = build_spde_config(load_config(args.config), seed_override=args.seed,
                            threads_override=args.threads)
    _, _, _, field = load_surface_csv(args.data)
    report = estimate_dataset(field, cfg)
    out = Path(args.out)
    if out.suffix != ".json":
        out.mkdir(parents=True, exist_ok=True)
        out = out / "report.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(report.to_json(), encoding="utf-8")
    print(f"wrote {out}")
    return EXIT_OK


def _run_mc(args, runner, builder) -> int:
    cfg = builder(load_config(args.config), seed_override=args.seed,
                  threads_override=args.threads)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    records = runner(cfg)
    write_replicates_csv(records, outdir / "replicates.csv")
    summary = summarize(records, cfg)
    write_summary_json(summary, outdir / "summary.json")
    print(f"wrote {outdir / 'replicates.csv'} and {outdir / 'summary.json'} "
          f"({summary['n_success']} ok, {summary['n_fail']} failed)")
    if experiment_failed(records):
        print("experiment failed: more than 10% of replicates failed", file=sys.stderr)
        return EXIT_FAILED
    return EXIT_OK


def cmd_mc(args) -> int:
    return _run_mc(args, run_replicates, build_spde_config)


def cmd_ou_mc(args) -> int:
    return _run_mc(args, run_ou_replicates, build_ou_config)


def cmd_paths(args) -> int:
    cfg = build_spde_config(load_config(args.config), seed_override=args.seed,
                            threads_override=args.threads)
    if not (cfg.paths_t or cfg.paths_y or cfg.paths_z):
        raise ConfigurationError("paths command needs at least one of paths.t/paths.y/paths.z")
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    grid = _simulate_grid(cfg)
    times, ys, zs = grid.times, grid.ys, grid.zs

    def nearest(axis: np.ndarray, value: float) -> int:
        return int(np.argmin(np.abs(axis - value)))

    def dump(name: str, rows) -> None:
        path = outdir / name
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("t,y,z,value\n")
            for t, y, z, v in rows:
                fh.write(f"{t:.17g},{y:.17g},{z:.17g},{v:.17g}\n")
        print(f"wrote {path}")

    for tv in cfg.paths_t:
        i = nearest(times, tv)
        dump(f"cross_t{times[i]:g}.csv",
             ((times[i], ys[j1], zs[j2], grid.field[i, j1, j2])
              for j1 in range(ys.size) for j2 in range(zs.size)))
    for yv in cfg.paths_y:
        j1 = nearest(ys, yv)
        dump(f"cross_y{ys[j1]:g}.csv",
             ((times[i], ys[j1], zs[j2], grid.field[i, j1, j2])
              for i in range(times.size) for j2 in range(zs.size)))
    for zv in cfg.paths_z:
        j2 = nearest(zs, zv)
        dump(f"cross_z{zs[j2]:g}.csv",
             ((times[i], ys[j1], zs[j2], grid.field[i, j1, j2])
              for i in range(times.size) for j1 in range(ys.size)))
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "mc": cmd_mc,
    "ou-mc": cmd_ou_mc,
    "paths": cmd_paths,
}


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ExperimentFailed as exc:
        print(f"experiment failed: {exc}", file=sys.stderr)
        return EXIT_FAILED
    except FileNotFoundError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
