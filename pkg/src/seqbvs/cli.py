"""Command-line interface: simulate, analyze, plot."""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from .config import load_config
from .errors import SeqbvsError
from .experiment import aggregate, default_config, run_experiment
from .inclusion import METHODS
from .outputs import (
    TRAJECTORIES_CSV,
    analyze_directory,
    emit_outputs,
    read_trajectories_csv,
    write_crossing_totals_plot,
)
from .svg import trajectory_chart


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="seqbvs", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run the sequential study and write outputs")
    sim.add_argument("--config", type=Path, default=None, help="key=value config file")
    sim.add_argument("--out", type=Path, required=True, help="output directory")
    sim.add_argument("--reps", type=int, default=None, help="override replication count")
    sim.add_argument("--profile", choices=("desk", "full"), default="desk")
    sim.add_argument("--seed", type=int, default=None, help="override base seed")
    sim.add_argument("--workers", type=int, default=1, help="parallel replication workers")
    sim.add_argument("--no-plots", action="store_true", help="skip SVG emission")

    ana = sub.add_parser("analyze", help="recompute report tables from trajectories CSV")
    ana.add_argument("--in", dest="indir", type=Path, required=True, help="run directory")

    plo = sub.add_parser("plot", help="re-render plots for one replication from CSV")
    plo.add_argument("--in", dest="indir", type=Path, required=True, help="run directory")
    plo.add_argument("--rep", type=int, required=True, help="replication index")
    plo.add_argument("--method", choices=METHODS + ("all",), default="all")
    return parser


def _cmd_simulate(args) -> int:
    if args.config is not None:
        config = load_config(args.config, profile=args.profile)
    else:
        config = default_config(args.profile)
    if args.reps is not None:
        config.reps = args.reps
    if args.seed is not None:
        config.base_seed = args.seed
    config.__post_init__()

    started = time.time()
    results = run_experiment(config, workers=args.workers, progress=True)
    stats = aggregate(results)
    written = emit_outputs(
        results,
        stats,
        args.out,
        config,
        plots=not args.no_plots,
        extra_manifest={"elapsed_seconds": round(time.time() - started, 3), "workers": args.workers},
    )
    print(f"wrote {written['trajectories']}")
    print(f"wrote {written['tables']}")
    print(f"wrote {written['manifest']}")
    return 0


def _print_table(name: str, per_method: dict[str, np.ndarray], p: int) -> None:
    print(name)
    header = "method".ljust(10) + "".join(f"x{k}".rjust(8) for k in range(1, p + 1))
    print(header)
    for meth, vals in per_method.items():
        print(meth.ljust(10) + "".join(f"{v:8.2f}" for v in vals))
    print()


def _cmd_analyze(args) -> int:
    stats = analyze_directory(args.indir)
    _print_table("mean crossings per covariate", stats.mean_crossings, stats.p)
    _print_table("final inclusion frequency", stats.final_freq, stats.p)
    print(f"total crossings per rep: mean {stats.total_mean}, variance {stats.total_var}")
    print(f"rewrote tables in {args.indir}")
    return 0


def _cmd_plot(args) -> int:
    results = read_trajectories_csv(Path(args.indir) / TRAJECTORIES_CSV)
    match = [r for r in results if r.rep == args.rep]
    if not match:
        print(f"no replication {args.rep} in {args.indir}", file=sys.stderr)
        return 2
    res = match[0]
    # true actives are unknown from the CSV alone; colour by final bvs call
    active = res.final_included["bvs"]
    strong: tuple[int, ...] = ()
    plots_dir = Path(args.indir) / "plots"
    plots_dir.mkdir(parents=True, exist_ok=True)
    ns = np.arange(res.n_min, res.n_max + 1)
    methods = METHODS if args.method == "all" else (args.method,)
    for meth in methods:
        svg = trajectory_chart(ns, res.trajectories[meth].probs, active, strong, f"rep {res.rep}, method {meth}")
        path = plots_dir / f"rep{res.rep:03d}_{meth}.svg"
        path.write_text(svg)
        print(f"wrote {path}")
    stats = aggregate(results)
    path = write_crossing_totals_plot(stats, args.indir)
    print(f"wrote {path}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "analyze":
            return _cmd_analyze(args)
        return _cmd_plot(args)
    except (SeqbvsError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
