"""Command-line entry point.

Subcommands::

    run      -c CONFIG -o DIR [--replication-traces]
    sweep    -c CONFIG -o DIR
    env      --level LEVEL [--misrepresent] -o FILE
    validate -c CONFIG
    plot     --kind KIND -i CSV -o SVG

Exit status is 0 on success and 2 for invalid input (bad config, bad CSV,
broken environment, unreadable file). Anything unexpected propagates as a
traceback, which Python reports with status 1.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .config import ConfigError, load_config, write_resolved
from .environments import EnvironmentLevel, apply_misrepresentation, build
from .harness import combination_config, run_batch, sweep_combinations
from .mdp import ContractError, save_spec
from .output import combination_dirname, write_csv, write_traces
from .svg import CHART_KINDS, ChartError, render_chart

log = logging.getLogger("socialrl")


def _report_config_error(exc: ConfigError) -> int:
    for path, rule in exc.problems:
        print(f"error: {path}: {rule}", file=sys.stderr)
    return 2


def cmd_run(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, out_dir=args.out)
    if cfg.sweep:
        log.warning("config has a sweep map; 'run' ignores it (use 'sweep')")
    log.info("running %d replications x %d steps", cfg.n_replications, cfg.horizon)
    result = run_batch(cfg, record_traces=args.replication_traces)
    paths = write_csv(result, args.out)
    if args.replication_traces:
        paths.append(write_traces(result, args.out))
    for p in paths:
        print(p)
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, out_dir=args.out)
    for combo in sweep_combinations(cfg):
        sub = Path(args.out) / combination_dirname(combo)
        combo_cfg = combination_config(cfg, combo)
        write_resolved(combo_cfg, sub)
        log.info("sweep point %s", sub.name)
        for p in write_csv(run_batch(combo_cfg), sub):
            print(p)
    return 0


def cmd_env(args: argparse.Namespace) -> int:
    spec = build(args.level)
    if args.misrepresent:
        spec = apply_misrepresentation(spec)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    save_spec(spec, out)
    print(out)
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    load_config(args.config)
    print("ok")
    return 0


def cmd_plot(args: argparse.Namespace) -> int:
    print(render_chart(args.input, args.kind, args.out))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="socialrl",
        description="Simulate dual-system users facing an engagement-maximising recommender.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one batch of replications and write CSVs")
    p.add_argument("-c", "--config", required=True, help="experiment JSON config")
    p.add_argument("-o", "--out", required=True, help="output directory")
    p.add_argument("--replication-traces", action="store_true",
                   help="also write every replication's step-by-step trace (large)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run every combination of the config's sweep map")
    p.add_argument("-c", "--config", required=True)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("env", help="dump a built-in environment as JSON")
    p.add_argument("--level", required=True, choices=[e.value for e in EnvironmentLevel])
    p.add_argument("--misrepresent", action="store_true", help="make the Healthy state unreachable")
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_env)

    p = sub.add_parser("validate", help="check a config without running it")
    p.add_argument("-c", "--config", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("plot", help="render a CSV output as an SVG line chart")
    p.add_argument("--kind", required=True, choices=sorted(CHART_KINDS))
    p.add_argument("-i", "--input", required=True)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        return _report_config_error(exc)
    except (ChartError, ContractError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
