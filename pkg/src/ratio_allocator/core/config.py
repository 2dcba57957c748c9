# -*- coding: utf-8 -*-
"""
Configuration management for ratio-allocator.

This module holds path and seed defaults read from the environment (or a
``.env`` file) plus the named constants shared across the package.
"""

# Import Packages
from decouple import config
from pathlib import Path

# Project Folders
# Note: __file__.parent.parent.parent.parent goes from src/ratio_allocator/core/ back to project root
PROJECT_DIR = Path(config("PROJECT_DIR", default=Path(__file__).parent.parent.parent.parent))
DATA_DIR = Path(config("DATA_DIR", default=PROJECT_DIR / "data"))
OUTPUT_DIR = Path(config("RATIO_ALLOC_OUTPUT_DIR", default=PROJECT_DIR / "output"))

# Global seed used when neither the run file nor --seed gives one
DEFAULT_SEED = config("RATIO_ALLOC_SEED", default=7, cast=int)


# ============================================================================
# Performance Ratios
# ============================================================================

# Canonical order; also the tie-breaking order for rankings
CANONICAL_RATIO_ORDER = ("sharpe", "mad", "minimax", "gini", "cvar", "rachev")

DEFAULT_ALPHA = 0.5
DEFAULT_BETA = 0.99


# ============================================================================
# Rolling Windows
# ============================================================================

DEFAULT_TRAIN_LEN = 156  # 13 years
DEFAULT_TEST_LEN = 60  # 5 years


# ============================================================================
# Network and Training Defaults
# ============================================================================

DEFAULT_HIDDEN_GRID = (2, 4, 8)
DEFAULT_GAMMA0 = 0.5
DEFAULT_MAX_ITERS = 5_000
DEFAULT_PATIENCE = 200
DEFAULT_IMPROVEMENT_TOL = 1e-8
DEFAULT_CONSTRAINT_TOL = 0.01
DEFAULT_CV_FOLDS = 3
MIN_TRAIN_MONTHS = 12


# ============================================================================
# Benchmark Defaults
# ============================================================================

DEFAULT_GAMMA_CRRA = 5.0
STATIC_PRESETS = (0.20, 0.60, 0.80)
BENCHMARK_SELECTORS = ("var", "factor", "parametric")
GRID_STEP = 0.001
FRONTIER_POINTS = 1_001
SIMULATION_DAYS = 21
SIMULATION_PATHS = 200
PARAMETRIC_RESTARTS = 10
PSD_TOLERANCE = 1e-10


# ============================================================================
# Interpretation Defaults
# ============================================================================

DEFAULT_PERMUTATION_REPEATS = 100
PERTURB_SHIFTS = (-3, -2, -1, 0, 1, 2, 3)


# ============================================================================
# Output Layout
# ============================================================================

MODELS_SUBDIR = "models"
REPORTS_SUBDIR = "reports"
INTERPRET_SUBDIR = "interpret"
FIGURES_SUBDIR = "figures"


def get_output_dir(base: Path | str | None, kind: str) -> Path:
    """Return the output subdirectory for one artifact kind.

    Parameters
    ----------
    base : Path | str | None
        Run output directory. If None, uses the configured OUTPUT_DIR.
    kind : str
        One of the ``*_SUBDIR`` names (``"models"``, ``"reports"``, ...).

    Returns
    -------
    Path
        The target directory path.
    """
    root = OUTPUT_DIR if base is None else Path(base)
    return root / kind


__all__ = [
    "PROJECT_DIR",
    "DATA_DIR",
    "OUTPUT_DIR",
    "DEFAULT_SEED",
    "CANONICAL_RATIO_ORDER",
    "DEFAULT_ALPHA",
    "DEFAULT_BETA",
    "DEFAULT_TRAIN_LEN",
    "DEFAULT_TEST_LEN",
    "DEFAULT_HIDDEN_GRID",
    "DEFAULT_GAMMA0",
    "DEFAULT_MAX_ITERS",
    "DEFAULT_PATIENCE",
    "DEFAULT_IMPROVEMENT_TOL",
    "DEFAULT_CONSTRAINT_TOL",
    "DEFAULT_CV_FOLDS",
    "MIN_TRAIN_MONTHS",
    "DEFAULT_GAMMA_CRRA",
    "STATIC_PRESETS",
    "BENCHMARK_SELECTORS",
    "GRID_STEP",
    "FRONTIER_POINTS",
    "SIMULATION_DAYS",
    "SIMULATION_PATHS",
    "PARAMETRIC_RESTARTS",
    "PSD_TOLERANCE",
    "DEFAULT_PERMUTATION_REPEATS",
    "PERTURB_SHIFTS",
    "MODELS_SUBDIR",
    "REPORTS_SUBDIR",
    "INTERPRET_SUBDIR",
    "FIGURES_SUBDIR",
    "get_output_dir",
]
