"""
Flags shared by every subcommand and their translation into a RunConfig.
"""

import argparse
import logging
from collections.abc import Callable
from pathlib import Path

from ..core.errors import exit_code_for
from ..core.run_config import RunConfig, load_run_config

logger = logging.getLogger(__name__)


def _split(value: str) -> list[str]:
    return [part.strip() for part in value.split(",") if part.strip()]


def add_run_arguments(parser: argparse.ArgumentParser) -> None:
    """
    Add the shared run flags to a subcommand parser.

    Parameters
    ----------
    parser : argparse.ArgumentParser
        Parser to configure
    """
    parser.add_argument(
        "--config",
        type=Path,
        default=None,
        help="TOML run configuration file",
    )
    parser.add_argument(
        "--ratio",
        default=None,
        help="Comma-separated ratios: sharpe, mad, minimax, gini, cvar, rachev (overrides ratios.kinds)",
    )
    parser.add_argument(
        "--seed",
        type=int,
        default=None,
        help="Global seed (overrides seed)",
    )
    parser.add_argument(
        "--out",
        type=Path,
        default=None,
        help="Output directory (overrides output.dir)",
    )
    parser.add_argument(
        "--benchmarks",
        default=None,
        help=(
            "Comma-separated benchmarks: var, factor, parametric, static:<pct> (overrides benchmarks.selectors). "
            "static:60 is 60%%; a value with a decimal point up to 1 is a fraction, so static:0.6 is also 60%%, "
            "static:1 is 1%% and static:1.0 is 100%%"
        ),
    )
    parser.add_argument(
        "--method",
        default=None,
        help="Comma-separated interpretation methods: cw, pi, perturb (overrides interpret.methods)",
    )
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="Override any configuration key (repeatable), e.g. --set training.max_iters=2000",
    )


def run_config_from_args(args: argparse.Namespace) -> RunConfig:
    """Load the run file and apply ``--set`` overrides, then the named flags."""
    updates: dict[str, object] = {}
    if args.ratio is not None:
        updates["ratios.kinds"] = _split(args.ratio)
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.out is not None:
        updates["output.dir"] = str(args.out)
    if args.benchmarks is not None:
        updates["benchmarks.selectors"] = _split(args.benchmarks)
    if args.method is not None:
        updates["interpret.methods"] = _split(args.method)
    return load_run_config(args.config, args.overrides, updates)


def run_command(action: Callable[[RunConfig], object], args: argparse.Namespace) -> int:
    """
    Run a workflow and map failures to exit codes.

    Returns
    -------
    int
        0 on success; 2 configuration, 3 data, 4 numerical error; 1 otherwise.
    """
    try:
        config = run_config_from_args(args)
        action(config)
        return 0
    except Exception as e:
        code = exit_code_for(e)
        if code == 1:
            logger.exception("Command failed: %s", e)
        else:
            logger.error("Command failed: %s", e)
        return code


__all__ = [
    "add_run_arguments",
    "run_config_from_args",
    "run_command",
]
