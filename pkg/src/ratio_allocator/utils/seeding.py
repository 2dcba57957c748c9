"""
Seeded random streams.

All randomness in the package comes from ``numpy.random.Generator`` over the
counter-based Philox bit generator, keyed through ``SeedSequence``. A tuple of
non-negative integers (the global seed plus stream offsets) identifies one
stream, so results do not depend on call order or platform.
"""

import numpy as np

# Offsets used to derive independent seeds from one global seed
FOLD_SEED_STRIDE = 10007
WINDOW_SEED_STRIDE = 7919


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Return a Philox generator for ``(seed, *stream)``.

    Parameters
    ----------
    seed : int
        Global 64-bit seed.
    *stream : int
        Optional stream identifiers (variable index, repetition, ...).

    Returns
    -------
    numpy.random.Generator
    """
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF, *(int(s) for s in stream)]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def derive_run_seed(seed: int, fold_index: int = 0, grid_index: int = 0) -> int:
    """Seed for a training run on cross-validation fold/grid point."""
    return seed + fold_index * FOLD_SEED_STRIDE + grid_index


def derive_window_seed(seed: int, window_index: int) -> int:
    """Seed for one rolling window of a backtest."""
    return seed + window_index * WINDOW_SEED_STRIDE


__all__ = [
    "FOLD_SEED_STRIDE",
    "WINDOW_SEED_STRIDE",
    "make_rng",
    "derive_run_seed",
    "derive_window_seed",
]
