"""
ratio-allocator
===============

Conditional asset allocation with a small feed-forward network that maps
market-state variables straight to portfolio weights, trained to maximize a
performance ratio (Sharpe, MAD, MiniMax, Gini, CVaR or Rachev) through a
Lagrangian objective.

This package provides functionality for:
- Loading, validating and aligning daily return panels and monthly states
- Training the weight network on rolling windows
- Backtesting it out of sample against AR(1)-moment, factor-moment,
  parametric CRRA and static benchmarks
- Interpreting trained networks (connection weights, permutation
  importance, perturb sensitivity)

Main Modules
------------
- core: data, ratios, network, training, benchmarks, backtests, interpretation
- utils: seeding and file helpers
- cli: the ``ratio-alloc`` command

Example Usage
-------------
>>> from ratio_allocator.core import SyntheticConfig, generate_synthetic, align_months
>>> from ratio_allocator.core import RatioSpec, build_schedule, run_ann
>>> panel, states = generate_synthetic(SyntheticConfig(months=216), seed=7)
>>> data = align_months(panel, states)
"""

__version__ = "0.1.0"
