"""
Backtest Command CLI
====================

Out-of-sample reports for the network and the benchmark methods.
"""

import argparse
import logging

from ..core.workflows import backtest_workflow
from .common import add_run_arguments, run_command

logger = logging.getLogger(__name__)


def configure_backtest_parser(parser: argparse.ArgumentParser) -> None:
    """
    Configure the backtest subcommand parser.

    Parameters
    ----------
    parser : argparse.ArgumentParser
        Parser to configure
    """
    parser.description = """
Run walk-forward backtests for the network and selected benchmarks.

Saved models are reused when they match the configuration; otherwise the
networks are trained in-line. Writes report JSONs, ratio_timeseries.csv,
weights_timeseries.csv, summary_table.csv and best_ratio.csv.

Examples:
  ratio-alloc backtest --config study.toml --benchmarks var,factor,parametric,static:60
  ratio-alloc backtest --config study.toml --ratio cvar --set benchmarks.simulation_paths=50
    """
    add_run_arguments(parser)
    parser.set_defaults(handler=handle_backtest_command)


def handle_backtest_command(args: argparse.Namespace) -> int:
    """
    Handle the backtest command.

    Parameters
    ----------
    args : argparse.Namespace
        Parsed command line arguments

    Returns
    -------
    int
        Exit code (0 for success, non-zero for failure)
    """
    return run_command(backtest_workflow, args)


__all__ = [
    "configure_backtest_parser",
    "handle_backtest_command",
]
