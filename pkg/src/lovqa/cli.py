"""Command-line entry point: ``lovqa <experiment> --seed S [--config file]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .dvps import InfeasibleError
from .experiments import BankInfeasible, ConfigError, Experiment, ExperimentConfig, run

log = logging.getLogger("lovqa")

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE = 0, 2, 3


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lovqa", description=__doc__)
    names = [e.value for e in Experiment]
    p.add_argument("experiment", nargs="?", choices=names, help="experiment to run")
    p.add_argument("--experiment", dest="experiment_flag", choices=names)
    p.add_argument("--config", type=Path, help="JSON config file; flags override it")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=str)
    p.add_argument("--backend", type=str)
    p.add_argument("--shots", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override any config field; VALUE is parsed as JSON when possible")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    data: dict = {}
    if args.config is not None:
        try:
            data = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        data[key] = _parse_value(value)
    experiment = args.experiment or args.experiment_flag
    if experiment is not None:
        data["experiment"] = experiment
    for key in ("seed", "out", "backend", "shots", "threads"):
        value = getattr(args, key)
        if value is not None:
            data[key] = value
    return ExperimentConfig.from_dict(data)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args)
        paths = run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BankInfeasible as exc:
        for x, anc, res in exc.failures:
            print(f"infeasible: x={x:.6f} anc={anc} best residual {res:.3e}", file=sys.stderr)
        for path in exc.paths:
            print(path)
        return EXIT_INFEASIBLE
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    for path in paths:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
