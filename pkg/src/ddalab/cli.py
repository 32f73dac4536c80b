"""``ddalab`` command line: bounds, run, threshold, sweep.

Exit codes: 0 success, 1 configuration error, 2 runtime failure (blow-up
in a single run, invalid threshold bracket, failed bound search), 3 I/O.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from contextlib import contextmanager
from functools import partial
from pathlib import Path

from . import __version__
from . import experiment as ex
from . import lorenz as lz
from .analysis import BracketError
from .config import ConfigError, ExperimentConfig
from .dda import (ThresholdConfig, Verdict, majority, monotonicity_anomalies,
                  threshold_search, write_series_csv)
from .integrators import BlowUpError
from .nse2d import bounds as nb
from .nse2d.io import write_snapshot

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_IO = 0, 1, 2, 3


def _header(cfg: ExperimentConfig) -> dict:
    return {"version": __version__, "config": cfg.to_ini()}


def _write_csv(path: Path, header: dict, columns, rows):
    with open(path, "w", newline="") as fh:
        for k, v in header.items():
            fh.write(f"# {k}={json.dumps(v)}\n")
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow(["" if x is None else (repr(x) if isinstance(x, float) else x) for x in row])


@contextmanager
def _pool(workers: int):
    """Executor-style ``map``; in-process when a single worker is requested."""
    if workers <= 1:
        yield map
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            yield pool.map


# ---------------------------------------------------------------- bounds

def bounds_rows(cfg: ExperimentConfig):
    """(name, value, formula) rows for the configured system."""
    cfg = cfg.resolved()
    if cfg.system == "lorenz":
        p = ex.lorenz_params(cfg)
        eta = ex.make_eta(cfg, lz.proj_X(), cfg.experiment.seed)
        b = lz.lorenz_bounds(p, eta, cfg.schedule.h)
        rows = b.as_rows()
        for frac in (0.25, 0.5, 1.0, 2.0):
            tau = frac * b.t_star
            rows.append((f"M({frac:g} t_star)", lz.contraction_M(p, tau), "closed form of M(tau)"))
        return rows
    s = cfg.nse2d
    b = nb.nse_bounds(s.nu, s.f_norm, s.L, s.lam, s.R, s.c, eta_h1_sq=cfg.eta.norm ** 2)
    rows = b.as_rows()
    rows.append(("M5_bound", b.M5_bound(cfg.schedule.h), "M5 / (1 - e^(-nu lambda1 h)) bounds ||u||^2"))
    ts = nb.t_star_nse(b)
    rows.append(("t_star", math.nan if ts is None else ts,
                 "root of M(t) = 1 at lambda (nan: M'(0) >= 0, no contraction window)"))
    if s.t_star_target is not None:
        formula = "smallest lambda with m'(t*) < 0, m = (1-eps) e^(-nu lambda t) + eps e^(7 beta t/3)"
        try:
            lam = nb.lambda_for_tstar(b, s.t_star_target)
        except BracketError as exc:
            lam, formula = math.nan, f"search failed: {exc}"
        rows.append(("lambda_for_t_star_target", lam, formula))
    return rows


def cmd_bounds(cfg: ExperimentConfig, out: Path, **_) -> int:
    """Print and tabulate the analytic bounds."""
    rows = bounds_rows(cfg)
    width = max(len(r[0]) for r in rows)
    print(f"# {cfg.system} bounds (ddalab {__version__})")
    for name, value, formula in rows:
        print(f"{name:<{width}} = {value:.10g}    [{formula}]")
    _write_csv(out / "bounds.csv", _header(cfg), ("name", "value", "formula"),
               [(n, float(v), f) for n, v, f in rows])
    failed = [n for n, _, f in rows if f.startswith("search failed")]
    return EXIT_RUNTIME if failed else EXIT_OK


# ---------------------------------------------------------------- run

PLOT_SCRIPT = """\
# gnuplot script: log error against time for each seed
set datafile separator ','
set logscale y
set format y '%.0e'
set xlabel 't'
set ylabel '{label}'
set key top right
plot {plots}
"""


def plot_script(files, column: int, label: str) -> str:
    plots = ", \\\n     ".join(
        f"'{f}' every ::1 using 1:{column} with lines title '{Path(f).stem}'" for f in files)
    return PLOT_SCRIPT.format(label=label, plots=plots)


def cmd_run(cfg: ExperimentConfig, out: Path, workers: int, seed_count: int | None, **_) -> int:
    """Assimilate and write error series plus a plot script.

    Navier-Stokes runs also store each spun-up reference field at the
    start of assimilation as a binary snapshot.
    """
    cfg = cfg.resolved()
    first = cfg.experiment.seed
    seeds = list(range(first, first + (seed_count or 1)))
    with _pool(workers) as pmap:
        refs = list(pmap(partial(ex.reference, cfg), seeds))
        results = list(pmap(partial(ex.run_one, cfg), seeds, refs))
    if cfg.system == "nse2d":
        grid = ex.nse_params(cfg).grid
        for seed, U0 in zip(seeds, refs):
            write_snapshot(out / f"reference_seed{seed}.bin", grid, U0, cfg.nse2d.nu, 0.0)
    files, blowups = [], []
    for seed, series in zip(seeds, results):
        series.metadata.update(_header(cfg))
        name = f"series_seed{seed}.csv"
        write_series_csv(out / name, series)
        files.append(name)
        s = ex.summarize(series)
        print(f"seed {seed}: {s['verdict']}, error reduction {s['error_reduction']:.3e}, "
              f"converged at t={s['converge_time']}")
        if series.blowup_time is not None:
            blowups.append((seed, series.blowup_time))
    nse = cfg.system == "nse2d"
    (out / "plot_error.gp").write_text(
        plot_script(files, 3 if nse else 2, "||U - u||" if nse else "|U - u|"))
    if blowups:
        for seed, t in blowups:
            print(f"seed {seed}: blow-up at t={t!r}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


# ---------------------------------------------------------------- threshold

def _probe(cfg, refs, h, seed) -> Verdict:
    return ex.run_one(cfg, seed, U0=refs[seed], h=h).verdict


def cmd_threshold(cfg: ExperimentConfig, out: Path, workers: int, seed_count: int | None, **_) -> int:
    """Bisect for the empirical critical observation interval."""
    cfg = cfg.resolved()
    n = seed_count or cfg.experiment.seed_count
    t = cfg.threshold
    with _pool(workers) as pmap:
        refs = dict(zip(range(n), pmap(partial(ex.reference, cfg), range(n))))
        try:
            res = threshold_search(partial(_probe, cfg, refs), t.h_lo, t.h_hi,
                                   ThresholdConfig(n, t.resolution), map_fn=pmap)
        except BracketError as exc:
            print(f"threshold: {exc}", file=sys.stderr)
            return EXIT_RUNTIME
    rows = []
    for h, verdicts in res.probes:
        counts = {v.value: sum(1 for x in verdicts if x == v) for v in Verdict}
        rows.append((h, majority(verdicts).value, counts["Converged"], counts["Diverged"],
                     counts["Undecided"]))
    _write_csv(out / "threshold.csv", {**_header(cfg), "h_conv": res.h_conv, "h_div": res.h_div},
               ("h", "majority", "converged", "diverged", "undecided"), rows)
    print(f"critical h in [{res.h_conv:.6g}, {res.h_div:.6g}] ({n} seeds, {len(rows)} probes)")
    return EXIT_OK


# ---------------------------------------------------------------- sweep

SWEEP_COLUMNS = ("h", "lam", "seed", "verdict", "final_error", "error_reduction",
                 "converge_time", "steps_to_converge", "blowup_time", "note")


def _cell(cfg, task):
    h, lam, seed, U0 = task
    try:
        return ex.summarize(ex.run_one(cfg, seed, U0=U0, h=h, lam=lam))
    except Exception as exc:  # recorded per cell, the sweep carries on
        return {"verdict": "Error", "note": f"{type(exc).__name__}: {exc}"}


def sweep_axes(cfg: ExperimentConfig):
    cfg = cfg.resolved()
    hs = sorted(cfg.sweep.h) or [cfg.schedule.h]
    if cfg.system == "lorenz":
        return hs, [None]
    return hs, sorted(cfg.sweep.lam) or [cfg.nse2d.lam]


def sweep_anomalies(summary: dict, hs, lams) -> list:
    """Converged -> Diverged flips along increasing lambda or decreasing h."""
    found = []
    for h in hs:
        order = [(h, lam) for lam in sorted(lams, key=lambda x: -(x or 0))]
        found += monotonicity_anomalies(summary, order)
    for lam in lams:
        found += monotonicity_anomalies(summary, [(h, lam) for h in sorted(hs)])
    return found


def run_sweep(cfg: ExperimentConfig, workers: int = 1, seed_count: int | None = None):
    """All (h, lambda, seed) cells; returns (rows, summary, anomalies)."""
    cfg = cfg.resolved()
    n = seed_count or cfg.experiment.seed_count
    hs, lams = sweep_axes(cfg)
    seeds = list(range(n))
    with _pool(workers) as pmap:
        refs = list(pmap(partial(ex.reference, cfg), seeds))
        tasks = [(h, lam, s, refs[s]) for h in hs for lam in lams for s in seeds]
        results = list(pmap(partial(_cell, cfg), tasks))
    rows, summary = [], {}
    for (h, lam, s, _), r in zip(tasks, results):
        rows.append((h, lam, s, r["verdict"], r.get("final_error"), r.get("error_reduction"),
                     r.get("converge_time"), r.get("steps_to_converge"), r.get("blowup_time"),
                     r.get("note", "")))
    for h in hs:
        for lam in lams:
            vs = [Verdict(r[3]) for r in rows if r[0] == h and r[1] == lam and r[3] != "Error"]
            summary[(h, lam)] = majority(vs) if vs else Verdict.UNDECIDED
    return rows, summary, sweep_anomalies(summary, hs, lams)


def cmd_sweep(cfg: ExperimentConfig, out: Path, workers: int, seed_count: int | None, **_) -> int:
    """Verdict grid over the sweep axes."""
    rows, summary, anomalies = run_sweep(cfg, workers, seed_count)
    table = list(rows)
    for (h, lam), v in summary.items():
        table.append((h, lam, "majority", v.value, None, None, None, None, None, ""))
    _write_csv(out / "sweep.csv", _header(cfg), SWEEP_COLUMNS, table)
    _write_csv(out / "anomalies.csv", _header(cfg), ("easier_h", "easier_lam", "harder_h", "harder_lam"),
               [(a[0], a[1], b[0], b[1]) for a, b in anomalies])
    for (h, lam), v in summary.items():
        label = f"h={h:g}" + ("" if lam is None else f" lambda={lam:g}")
        print(f"{label}: {v.value}")
    errors = sum(1 for r in rows if r[3] == "Error")
    if errors:
        print(f"{errors} cell(s) failed, see sweep.csv", file=sys.stderr)
    for a, b in anomalies:
        print(f"anomaly: {a} diverged while harder {b} converged", file=sys.stderr)
    return EXIT_OK


COMMANDS = {"bounds": cmd_bounds, "run": cmd_run, "threshold": cmd_threshold, "sweep": cmd_sweep}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ddalab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"ddalab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=(fn.__doc__ or name).splitlines()[0])
        p.add_argument("--config", type=Path, help="INI experiment file (defaults if omitted)")
        p.add_argument("--out", type=Path, default=Path("runs"), help="output directory")
        p.add_argument("--workers", type=int, default=os.cpu_count() or 1,
                       help="worker processes (default: number of processors)")
        p.add_argument("--seed-count", type=int, default=None,
                       help="reference seeds (overrides experiment.seed_count)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
        cfg.validate()
        if args.seed_count is not None and args.seed_count < 1:
            raise ConfigError("--seed-count", "must be at least 1")
        if args.workers < 1:
            raise ConfigError("--workers", "must be at least 1")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "config.ini").write_text(
            f"; ddalab {__version__}\n" + cfg.to_ini())
        return COMMANDS[args.command](cfg, out=args.out, workers=args.workers,
                                      seed_count=args.seed_count)
    except BlowUpError as exc:  # e.g. the reference trajectory itself
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except ValueError as exc:  # parameter validation inside the modules
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
