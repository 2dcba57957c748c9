"""
Interpret Command CLI
=====================

Variable importance and sensitivity of trained networks.
"""

import argparse
import logging

from ..core.workflows import interpret_workflow
from .common import add_run_arguments, run_command

logger = logging.getLogger(__name__)


def configure_interpret_parser(parser: argparse.ArgumentParser) -> None:
    """
    Configure the interpret subcommand parser.

    Parameters
    ----------
    parser : argparse.ArgumentParser
        Parser to configure
    """
    parser.description = """
Interpret trained networks per window plus an average over windows.

Methods:
- cw: connection weights (signed; ranked by magnitude)
- pi: permutation importance on mean monthly Sharpe (interpret.repeats shuffles)
- perturb: percent change in mean Sharpe for shifts of -3..+3 stddev

Writes importance.csv and sensitivity.csv under <out>/interpret/<ratio>/.

Examples:
  ratio-alloc interpret --config study.toml --method pi
  ratio-alloc interpret --config study.toml --method cw,perturb --ratio sharpe
  ratio-alloc interpret --config study.toml --method perturb --figures
    """
    add_run_arguments(parser)
    parser.add_argument(
        "--figures",
        action="store_true",
        help="Also draw one perturb-sensitivity PNG per ratio and window under <out>/figures",
    )
    parser.set_defaults(handler=handle_interpret_command)


def handle_interpret_command(args: argparse.Namespace) -> int:
    """
    Handle the interpret command.

    Parameters
    ----------
    args : argparse.Namespace
        Parsed command line arguments

    Returns
    -------
    int
        Exit code (0 for success, non-zero for failure)
    """
    return run_command(lambda config: interpret_workflow(config, figures=args.figures), args)


__all__ = [
    "configure_interpret_parser",
    "handle_interpret_command",
]
