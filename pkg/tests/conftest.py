"""Shared fixtures for the ratio-allocator test suite."""

import numpy as np
import pytest

from ratio_allocator.core.data_io import (
    AlignedDataset,
    SyntheticConfig,
    align_months,
    generate_synthetic,
)
from ratio_allocator.core.training import TrainConfig


PLANTED = SyntheticConfig(
    months=72,
    days_per_month=10,
    n_noise=2,
    mean_gap=0.02,
    volatility=0.01,
    signal_floor=1.0,
)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def planted_data() -> AlignedDataset:
    """Two assets whose better one flips with the sign of the ``signal`` state."""
    panel, states = generate_synthetic(PLANTED, seed=11)
    return align_months(panel, states)


@pytest.fixture
def toy_data(rng) -> AlignedDataset:
    """Six months of random daily returns for two assets and three states."""
    return AlignedDataset(
        states=rng.standard_normal((6, 3)),
        month_returns=tuple(rng.normal(0.001, 0.01, size=(8, 2)) for _ in range(6)),
        month_keys=np.arange("2000-01", "2000-07", dtype="datetime64[M]"),
        variable_names=("a", "b", "c"),
        asset_names=("x", "y"),
    )


@pytest.fixture
def fast_train_config() -> TrainConfig:
    return TrainConfig(gamma0=20.0, max_iters=400, patience=100, hidden_grid=(2,), seed=3)
