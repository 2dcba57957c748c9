"""
Report Command CLI
==================

Tables and figures from saved backtest reports.
"""

import argparse
import logging

from ..core.workflows import report_workflow
from .common import add_run_arguments, run_command

logger = logging.getLogger(__name__)


def configure_report_parser(parser: argparse.ArgumentParser) -> None:
    """
    Configure the report subcommand parser.

    Parameters
    ----------
    parser : argparse.ArgumentParser
        Parser to configure
    """
    parser.description = """
Collect the report JSONs under <out>/reports and write summary_table.csv
(ANN vs best benchmark with significance stars) and ranking.csv (ratios
ranked by mean monthly return and by monthly win frequency).

Examples:
  ratio-alloc report --config study.toml
  ratio-alloc report --out output --config study.toml --figures
    """
    add_run_arguments(parser)
    parser.add_argument(
        "--figures",
        action="store_true",
        help="Also draw PNG figures under <out>/figures",
    )
    parser.set_defaults(handler=handle_report_command)


def handle_report_command(args: argparse.Namespace) -> int:
    """
    Handle the report command.

    Parameters
    ----------
    args : argparse.Namespace
        Parsed command line arguments

    Returns
    -------
    int
        Exit code (0 for success, non-zero for failure)
    """
    return run_command(lambda config: report_workflow(config, figures=args.figures), args)


__all__ = [
    "configure_report_parser",
    "handle_report_command",
]
