"""
Train Command CLI
=================

Train one network per ratio and rolling window.
"""

import argparse
import logging

from ..core.workflows import train_workflow
from .common import add_run_arguments, run_command

logger = logging.getLogger(__name__)


def configure_train_parser(parser: argparse.ArgumentParser) -> None:
    """
    Configure the train subcommand parser.

    Parameters
    ----------
    parser : argparse.ArgumentParser
        Parser to configure
    """
    parser.description = """
Train the weight network on every rolling training window.

Models are written to <out>/models/<ratio>/window_<w>.json together with
their objective traces.

Examples:
  # Train Sharpe and CVaR networks on a configured study
  ratio-alloc train --config study.toml --ratio sharpe,cvar

  # Synthetic run with a fixed seed, exporting the generated data
  ratio-alloc train --config synthetic.toml --seed 7 --export-synthetic
    """
    add_run_arguments(parser)
    parser.add_argument(
        "--export-synthetic",
        action="store_true",
        help="Write the generated synthetic returns/states CSVs next to the models",
    )
    parser.set_defaults(handler=handle_train_command)


def handle_train_command(args: argparse.Namespace) -> int:
    """
    Handle the train command.

    Parameters
    ----------
    args : argparse.Namespace
        Parsed command line arguments

    Returns
    -------
    int
        Exit code (0 for success, non-zero for failure)
    """
    return run_command(lambda config: train_workflow(config, export_synthetic=args.export_synthetic), args)


__all__ = [
    "configure_train_parser",
    "handle_train_command",
]
