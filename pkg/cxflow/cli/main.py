"""
Command line entry point.

    cxflow eval --config site.cfg --out runs/eval --repeats 10
    cxflow sweep --config site.cfg --axis rv_rate --values 0.2,0.5,1.0 --baseline notl
    cxflow train --config site.cfg --out runs/train

``--log-level`` and ``--out`` fall back to ``CXFLOW_LOG_LEVEL`` and ``CXFLOW_OUT_DIR``, read from the environment or a
``.env`` file. Exit codes: 0 on success, 2 for invalid configs or inputs, 1 for anything else.
"""

import argparse
import logging
import os
import sys
from typing import Optional, Sequence

from dotenv import load_dotenv
from pydantic import ValidationError

from cxflow import __version__
from cxflow.cli.config import ScenarioConfig, parse_config
from cxflow.cli.runner import run_eval, run_scenario, run_sweep, run_train, run_validate_demand
from cxflow.common.enums import ControllerKind, SweepAxis
from cxflow.common.exceptions import ConfigError, CxflowError
from cxflow.common.utils import split_csv

log = logging.getLogger("cxflow")

COMMANDS = ("train", "eval", "sweep", "scenario", "validate-demand")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario config file; defaults apply when omitted")
    common.add_argument("--seed", type=int, help="base seed, overrides the config")
    common.add_argument("--out", default=os.environ.get("CXFLOW_OUT_DIR"), help="output directory")
    common.add_argument("--repeats", type=int, help="rollouts per evaluation, overrides the config")
    common.add_argument(
        "--log-level",
        default=os.environ.get("CXFLOW_LOG_LEVEL", "INFO"),
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        type=str.upper,
    )

    parser = argparse.ArgumentParser(prog="cxflow", description="Mixed-traffic intersection control experiments")
    parser.add_argument("--version", action="version", version=f"cxflow {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("train", parents=[common], help="train the shared Stop/Go policy")
    sub.add_parser("eval", parents=[common], help="evaluate a controller over repeated rollouts")
    sub.add_parser("scenario", parents=[common], help="evaluate with scripted blackout or RV rate events")

    sweep = sub.add_parser("sweep", parents=[common], help="evaluate over a range of one parameter")
    sweep.add_argument("--axis", choices=[a.value for a in SweepAxis], help="demand, rv_rate or per")
    sweep.add_argument("--values", help="comma separated values, e.g. 100,200,300")
    sweep.add_argument("--baseline", choices=[k.value for k in ControllerKind], help="controller to compare against")

    validate = sub.add_parser("validate-demand", parents=[common], help="GEH check of simulated flows")
    validate.add_argument("--window", type=float, default=3600.0, help="counting window, s")
    return parser


def load_config(args: argparse.Namespace) -> ScenarioConfig:
    config = parse_config(args.config) if args.config else ScenarioConfig()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.repeats is not None:
        overrides["repeats"] = args.repeats
    if overrides:
        config = ScenarioConfig.model_validate({**config.model_dump(), **overrides})
    return config


def sweep_args(args: argparse.Namespace, config: ScenarioConfig):
    axis = args.axis or (config.sweep.axis.value if config.sweep else None)
    if axis is None:
        raise ConfigError("a sweep needs --axis or sweep.axis", key="sweep.axis")
    if args.values:
        values = [float(v) for v in split_csv(args.values)]
    else:
        values = config.sweep.values if config.sweep else []
    if not values:
        raise ConfigError("a sweep needs --values or sweep.values", key="sweep.values")
    baseline = ControllerKind(args.baseline) if args.baseline else None
    return SweepAxis(axis), values, baseline


def dispatch(args: argparse.Namespace) -> None:
    config = load_config(args)
    out = args.out
    if args.command == "train":
        result = run_train(config, out)
        log.info(f"trained {len(result.curves)} episodes")
    elif args.command == "eval":
        run_eval(config, out)
    elif args.command == "scenario":
        run_scenario(config, out)
    elif args.command == "sweep":
        axis, values, baseline = sweep_args(args, config)
        result = run_sweep(config, axis, values, out, baseline)
        if result.min_safe_rate is not None:
            print(f"min_safe_rate = {result.min_safe_rate}")
    elif args.command == "validate-demand":
        report = run_validate_demand(config, out, args.window)
        print(f"mean GEH {report.mean:.3f} ({'pass' if report.passed else 'fail'})")
    if out:
        log.info(f"outputs written to {out}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    load_dotenv()
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        dispatch(args)
    except (CxflowError, ValidationError, ValueError) as e:
        print(f"cxflow: error: {str(e).splitlines()[0]}", file=sys.stderr)
        return 2
    except Exception:
        log.exception(f"cxflow {args.command} failed")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
