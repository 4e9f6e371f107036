"""Command-line experiment runner.

    fractalgen synth-gap --seed 3 --out runs/synth
    fractalgen run --config experiment.yaml --threads 4 --format json
    fractalgen bound --set sweep=n --set "values=[100, 1000, 10000]"

Exit codes: 0 success, 2 invalid configuration, 3 run aborted with partial
results written.
"""

from __future__ import annotations

import argparse
import logging
import sys

import yaml

from .config import KINDS, ConfigError, ExperimentConfig, load_config
from .experiments import run_experiment
from .output import format_table, write_outputs

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL = 0, 2, 3

logger = logging.getLogger("fractalgen")


def _add_common(p):
    p.add_argument("--config", help="YAML/JSON experiment config")
    p.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    p.add_argument("--out", default=None, help="output directory (default: runs/<kind>)")
    p.add_argument("--threads", type=int, default=1, help="worker threads")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--repetitions", type=int, help="override the repetition count")
    p.add_argument("--time-budget", type=float, help="seconds before remaining tasks are skipped")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override one experiment parameter (value parsed as YAML)")
    p.add_argument("--no-plots", action="store_true", help="skip figure rendering")
    p.add_argument("-q", "--quiet", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fractalgen", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    _add_common(sub.add_parser("run", help="run the experiment named by the config's 'kind'"))
    for kind in KINDS:
        _add_common(sub.add_parser(kind, help=f"run a {kind} experiment"))
    return parser


def resolve_config(args) -> ExperimentConfig:
    data = load_config(args.config) if args.config else {}
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a mapping")
    if args.command != "run":
        if data.get("kind", args.command) != args.command:
            raise ConfigError(f"config is for {data['kind']!r}, not {args.command!r}")
        data["kind"] = args.command
    params = dict(data.get("params") or {})
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        params[key.strip()] = yaml.safe_load(value)
    data["params"] = params
    if args.seed is not None:
        data["seed"] = args.seed
    if args.repetitions is not None:
        data["repetitions"] = args.repetitions
    if args.time_budget is not None:
        data["time_budget"] = args.time_budget
    return ExperimentConfig.from_dict(data)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
    except (ConfigError, OSError) as exc:
        print(f"fractalgen: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.threads < 1:
        print("fractalgen: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG

    out_dir = args.out or f"runs/{cfg.kind}"
    logger.info("running %s (config %s, seed %d) -> %s", cfg.kind, cfg.config_hash, cfg.seed, out_dir)
    result = run_experiment(cfg, threads=args.threads)
    write_outputs(result, cfg, out_dir, fmt=args.format, plots=not args.no_plots)

    if not args.quiet:
        if result.summary:
            print(format_table(result.summary_columns, result.summary))
        else:
            print(format_table(result.columns, result.rows))
        for k, v in result.notes.items():
            print(f"{k}: {v}")
    if result.partial:
        print("fractalgen: run aborted early; partial results written", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
