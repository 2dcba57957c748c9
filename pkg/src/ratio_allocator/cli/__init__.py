"""
ratio-allocator CLI
===================

Command-line interface for training, backtesting and interpreting the
ratio-maximizing weight network.

Commands
--------
- ratio-alloc train: Train one network per ratio and rolling window
- ratio-alloc backtest: Out-of-sample reports for the network and benchmarks
- ratio-alloc interpret: Connection weights, permutation importance, perturb
- ratio-alloc report: Summary/ranking tables and figures from saved reports

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
failure, 1 anything else.

Example Usage
-------------
$ ratio-alloc train --config study.toml --ratio sharpe,cvar
$ ratio-alloc backtest --config study.toml --benchmarks var,factor,parametric,static:60
$ ratio-alloc interpret --config study.toml --method pi
$ ratio-alloc report --config study.toml --figures

For detailed help on each command:
$ ratio-alloc train --help
"""

import argparse
import logging
import sys
from typing import Sequence

from .backtest import configure_backtest_parser
from .interpret import configure_interpret_parser
from .report import configure_report_parser
from .train import configure_train_parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ratio-alloc",
        description="ratio-allocator - conditional asset allocation by performance-ratio maximization",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Train Sharpe and CVaR networks
  ratio-alloc train --config study.toml --ratio sharpe,cvar

  # Backtest against all benchmarks and a 60/40 static portfolio
  ratio-alloc backtest --config study.toml --benchmarks var,factor,parametric,static:60

  # Permutation importance with 100 shuffles per variable
  ratio-alloc interpret --config study.toml --method pi

  # Tables and figures
  ratio-alloc report --config study.toml --figures
        """,
    )

    parser.add_argument(
        "--log-level",
        choices=["DEBUG", "INFO", "WARNING", "ERROR"],
        default="INFO",
        help="Set logging level (default: INFO)",
    )

    # Create subcommands
    subparsers = parser.add_subparsers(
        dest="command",
        required=True,
        help="Command to execute",
    )

    commands = {
        "train": ("Train networks on rolling windows", configure_train_parser),
        "backtest": ("Run out-of-sample backtests", configure_backtest_parser),
        "interpret": ("Interpret trained networks", configure_interpret_parser),
        "report": ("Write tables and figures from saved reports", configure_report_parser),
    }
    for name, (help_text, configure) in commands.items():
        sub = subparsers.add_parser(name, help=help_text, formatter_class=argparse.RawDescriptionHelpFormatter)
        configure(sub)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    """
    Main entry point for the ratio-alloc CLI.

    Parameters
    ----------
    argv : Sequence[str] | None, optional
        Command line arguments. If None, uses sys.argv[1:]

    Returns
    -------
    int
        Exit code (0 for success, non-zero for failure)
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors and 0 after --help
        return int(exc.code or 0)

    # Configure logging
    logging.basicConfig(
        level=getattr(logging, args.log_level),
        format="%(asctime)s - %(levelname)s - %(message)s",
    )

    # Execute command
    try:
        return args.handler(args)
    except KeyboardInterrupt:
        print("\n\nOperation cancelled by user", file=sys.stderr)
        return 130


if __name__ == "__main__":
    sys.exit(main())
