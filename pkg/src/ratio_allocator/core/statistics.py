"""
Descriptive statistics shared by the data and backtest layers.
"""

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import InsufficientData


@dataclass(frozen=True)
class SummaryStats:
    """Mean, population stddev, skewness and raw (non-excess) kurtosis.

    ``skewness``/``kurtosis`` are None when the series has zero spread.
    """

    n: int
    mean: float
    stddev: float
    skewness: float | None
    kurtosis: float | None

    def to_dict(self) -> dict[str, float | int | None]:
        return {
            "n": self.n,
            "mean": self.mean,
            "stddev": self.stddev,
            "skewness": self.skewness,
            "kurtosis": self.kurtosis,
        }


def summary_statistics(values: np.ndarray) -> SummaryStats:
    """Summarize a 1-D series.

    Parameters
    ----------
    values : np.ndarray
        Series with at least two finite values.

    Returns
    -------
    SummaryStats
        Population moments; skewness is m3/m2^1.5, kurtosis m4/m2^2.

    Raises
    ------
    InsufficientData
        If fewer than two values are given.
    """
    x = np.asarray(values, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise InsufficientData("Summary statistics need at least two values.")
    mean = float(x.mean())
    stddev = float(x.std())
    if np.ptp(x) == 0 or stddev == 0:
        return SummaryStats(n=x.size, mean=mean, stddev=0.0, skewness=None, kurtosis=None)
    skewness = float(stats.skew(x, bias=True))
    kurtosis = float(stats.kurtosis(x, fisher=False, bias=True))
    return SummaryStats(n=x.size, mean=mean, stddev=stddev, skewness=skewness, kurtosis=kurtosis)


__all__ = [
    "SummaryStats",
    "summary_statistics",
]
