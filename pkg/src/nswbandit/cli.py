"""Command line entry point: ``nswbandit run`` and ``nswbandit chart``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .algorithms import DEFAULT_BONUS_SCALE, DEFAULT_DELTA, DEFAULT_WIDTH_SCALE
from .chart import emit_regret_chart
from .harness import ConfigError, config_from_mapping, load_config_file, read_trace_csv, run_batch

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nswbandit", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a batch of bandit experiments")
    run.add_argument("--agents", type=_int_list, default=[4], help="comma list of N, paired with --arms")
    run.add_argument("--arms", type=_int_list, default=[2], help="comma list of K, paired with --agents")
    run.add_argument("--horizon", type=int, default=10_000)
    run.add_argument("--instances", type=int, default=10)
    run.add_argument("--algos", default="fair-ucb,baseline-ucb",
                     help="comma list from fair-ucb, high-startup, baseline-ucb")
    run.add_argument("--delta", type=float, default=DEFAULT_DELTA)
    run.add_argument("--width-scale", type=float, default=DEFAULT_WIDTH_SCALE)
    run.add_argument("--bonus-scale", type=float, default=DEFAULT_BONUS_SCALE)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--out", default="results")
    run.add_argument("--workers", type=int, default=1)
    run.add_argument("--stride", type=int, default=100, help="persist every stride-th round")
    run.add_argument("--checkpoints", type=_int_list, default=[200_000, 500_000])
    run.add_argument("--anytime", action="store_true", help="use the horizon-free confidence width")
    run.add_argument("--no-charts", action="store_true")
    run.add_argument("--config", help="YAML/JSON file whose fields override the flags")

    chart = sub.add_parser("chart", help="draw an SVG regret chart from trace CSVs")
    chart.add_argument("traces", nargs="+")
    chart.add_argument("-o", "--output", required=True)
    chart.add_argument("--labels", help="comma list of legend labels (default: file names)")
    chart.add_argument("--title", default="Cumulative regret")
    return p


def _config_from_args(args):
    if len(args.agents) != len(args.arms):
        raise ConfigError("agents", "--agents and --arms need the same number of entries")
    data = dict(sizes=list(zip(args.agents, args.arms)), horizon=args.horizon, instance_count=args.instances,
                algorithms=[a for a in args.algos.split(",") if a.strip()], delta=args.delta,
                width_scale=args.width_scale, bonus_scale=args.bonus_scale, master_seed=args.seed,
                output_dir=args.out, workers=args.workers, checkpoint_every=args.stride,
                checkpoints=args.checkpoints, anytime=args.anytime, charts=not args.no_charts)
    if args.config:
        data.update(load_config_file(args.config))
    return config_from_mapping(data)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "run":
        try:
            config = _config_from_args(args)
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        try:
            rows = run_batch(config)
        except ConfigError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        except Exception as exc:  # noqa: BLE001 - reported through the exit code
            print(f"run failed: {exc}", file=sys.stderr)
            return EXIT_RUNTIME
        for r in rows:
            print(f"N={r['n_agents']:<3} K={r['n_arms']:<2} {r['algorithm']:<13} t={r['checkpoint_t']:<7} "
                  f"regret {r['mean_regret']:.1f} ± {r['std_regret']:.1f}  "
                  f"opt NSW {r['mean_opt_nsw']:.4f} ± {r['std_opt_nsw']:.4f}")
        return EXIT_OK

    labels = args.labels.split(",") if args.labels else None
    try:
        traces = [read_trace_csv(p) for p in args.traces]
        if labels is None:
            labels = [Path(p).stem for p in args.traces]
        emit_regret_chart(traces, args.output, labels=labels, title=args.title)
    except (OSError, ValueError) as exc:
        print(f"chart failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
