"""
Core functionality for ratio-allocator.

Modules
-------
- data_io: return panels, state series, alignment, synthetic data
- ratios: the six performance ratios and their gradients
- network: one-hidden-layer weight network
- training: Lagrangian training, cross-validation, prediction
- benchmarks: AR(1)/factor moment benchmarks, CRRA policy, static weights
- backtest: rolling schedules, out-of-sample reports, tests, rankings
- interpret: connection weights, permutation importance, perturb
- run_config: TOML run configuration
- workflows: end-to-end pipelines used by the CLI
"""

from .backtest import (
    BacktestReport,
    build_schedule,
    mean_difference_test,
    rank_ratios,
    run_ann,
    run_benchmark,
    summarize,
)
from .data_io import (
    AlignedDataset,
    ReturnPanel,
    StateSeries,
    SyntheticConfig,
    align_months,
    generate_synthetic,
    load_returns_csv,
    load_states_csv,
)
from .errors import (
    ConfigError,
    DataError,
    NumericalError,
    RatioAllocatorError,
)
from .interpret import (
    connection_weights,
    permutation_importance,
    perturb_sensitivity,
)
from .network import NetworkParams, NetworkShape, OutputMode
from .ratios import RatioKind, RatioSpec, evaluate
from .training import TrainConfig, TrainedModel, predict_weights, train

__all__ = [
    # Data
    "AlignedDataset",
    "ReturnPanel",
    "StateSeries",
    "SyntheticConfig",
    "align_months",
    "generate_synthetic",
    "load_returns_csv",
    "load_states_csv",

    # Ratios and network
    "RatioKind",
    "RatioSpec",
    "evaluate",
    "NetworkParams",
    "NetworkShape",
    "OutputMode",

    # Training
    "TrainConfig",
    "TrainedModel",
    "train",
    "predict_weights",

    # Backtests
    "BacktestReport",
    "build_schedule",
    "run_ann",
    "run_benchmark",
    "summarize",
    "mean_difference_test",
    "rank_ratios",

    # Interpretation
    "connection_weights",
    "permutation_importance",
    "perturb_sensitivity",

    # Errors
    "RatioAllocatorError",
    "ConfigError",
    "DataError",
    "NumericalError",
]
