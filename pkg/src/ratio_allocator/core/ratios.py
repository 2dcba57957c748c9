"""
Performance ratios
==================

Six reward/risk ratios evaluated on vectors of (daily) portfolio returns,
with (sub)gradients with respect to those returns.

=========  ==================================  ==================================
kind       reward                              risk
=========  ==================================  ==================================
sharpe     mean(r)                             population stddev(r)
mad        mean(r)                             mean |r - mean(r)|
minimax    mean(r)                             -min(r)  (maximum loss)
gini       mean(r)                             half the Gini mean difference
cvar       mean(r)                             expected tail loss at alpha
rachev     mean of best ceil((1-beta)D) >= 1   expected tail loss at alpha
=========  ==================================  ==================================

Tail sets have fixed cardinality: the worst ``ceil(alpha*D)`` observations for
the expected tail loss, no interpolation. Moments are population (1/D).

The private ``_reward_risk`` / ``_gradient`` helpers work on the last axis of
arrays of any leading shape, so training and the grid optimizer can evaluate
many months or candidate portfolios in one call.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .config import CANONICAL_RATIO_ORDER, DEFAULT_ALPHA, DEFAULT_BETA
from .errors import ConfigError, DegenerateRisk, InsufficientData, NonFiniteInput


logger = logging.getLogger(__name__)


class RatioKind(str, Enum):
    SHARPE = "sharpe"
    MAD = "mad"
    MINIMAX = "minimax"
    GINI = "gini"
    CVAR = "cvar"
    RACHEV = "rachev"


@dataclass(frozen=True)
class RatioSpec:
    """Which ratio to use, with tail parameters for CVaR and Rachev."""

    kind: RatioKind
    alpha: float = DEFAULT_ALPHA
    beta: float = DEFAULT_BETA

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", RatioKind(self.kind))
        if not 0 < self.alpha < 1 or not 0 < self.beta < 1:
            raise ConfigError(f"Ratio tail parameters must lie in (0, 1); got alpha={self.alpha}, beta={self.beta}.")

    @property
    def token(self) -> str:
        return self.kind.value

    @classmethod
    def parse(cls, token: str, alpha: float = DEFAULT_ALPHA, beta: float = DEFAULT_BETA) -> "RatioSpec":
        """Build a spec from a lowercase token such as ``"cvar"``."""
        token = token.strip().lower()
        if token not in CANONICAL_RATIO_ORDER:
            raise ConfigError(f"Unknown ratio '{token}'. Expected one of {', '.join(CANONICAL_RATIO_ORDER)}.")
        return cls(RatioKind(token), alpha=alpha, beta=beta)

    def to_dict(self) -> dict[str, str | float]:
        return {"kind": self.token, "alpha": self.alpha, "beta": self.beta}

    @classmethod
    def from_dict(cls, payload: dict) -> "RatioSpec":
        return cls(RatioKind(payload["kind"]), alpha=payload["alpha"], beta=payload["beta"])


@dataclass(frozen=True)
class RatioValue:
    """A ratio with its parts; ``degenerate_flag`` marks a risk <= 0."""

    value: float
    reward: float
    risk: float
    degenerate_flag: bool


# ============================================================================
# Tail Measures
# ============================================================================


def tail_count(level: float, size: int) -> int:
    """Number of observations in a lower tail: ceil(level * size), at least 1."""
    # Guard against 0.1 * 30 = 3.0000000000000004 rounding up
    return max(1, math.ceil(level * size - 1e-9))


def upper_tail_count(level: float, size: int) -> int:
    """Number of observations in an upper tail: max(1, ceil((1 - level) * size))."""
    return max(1, math.ceil((1.0 - level) * size - 1e-9))


def _as_vector(r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if r.ndim != 1 or r.size == 0:
        raise InsufficientData("Ratio inputs must be non-empty 1-D return vectors.")
    return r


def empirical_var(r: np.ndarray, level: float) -> float:
    """Value at risk: minus the k-th smallest return, k = ceil(level * D)."""
    r = _as_vector(r)
    k = tail_count(level, r.size)
    return float(-np.sort(r)[k - 1])


def expected_tail_loss(r: np.ndarray, level: float) -> float:
    """Mean loss over the worst ceil(level * D) observations."""
    r = _as_vector(r)
    k = tail_count(level, r.size)
    return float(-np.sort(r)[:k].mean())


def upper_tail_mean(r: np.ndarray, level: float) -> float:
    """Mean of the best max(1, ceil((1 - level) * D)) observations."""
    r = _as_vector(r)
    u = upper_tail_count(level, r.size)
    return float(np.sort(r)[r.size - u:].mean())


# ============================================================================
# Vectorized Reward / Risk
# ============================================================================


def _reward_risk(spec: RatioSpec, r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Reward and risk along the last axis of ``r``."""
    size = r.shape[-1]
    mean = r.mean(axis=-1)
    kind = spec.kind

    if kind is RatioKind.SHARPE:
        return mean, r.std(axis=-1)
    if kind is RatioKind.MAD:
        return mean, np.abs(r - mean[..., None]).mean(axis=-1)
    if kind is RatioKind.MINIMAX:
        return mean, -r.min(axis=-1)
    if kind is RatioKind.GINI:
        # sum_{i<j} |r_i - r_j| = sum_k (2k - D + 1) r_(k) over sorted r, k = 0..D-1
        ordered = np.sort(r, axis=-1)
        weights = 2.0 * np.arange(size) - size + 1.0
        pair_sum = (ordered * weights).sum(axis=-1)
        return mean, pair_sum / (size * (size - 1))

    ordered = np.sort(r, axis=-1)
    k = tail_count(spec.alpha, size)
    etl = -ordered[..., :k].mean(axis=-1)
    if kind is RatioKind.CVAR:
        return mean, etl
    u = upper_tail_count(spec.beta, size)
    return ordered[..., size - u:].mean(axis=-1), etl


def _check_batch(r: np.ndarray) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if r.ndim == 0 or r.shape[-1] < 2:
        raise InsufficientData("Ratios need at least two returns.")
    if not np.all(np.isfinite(r)):
        raise NonFiniteInput("Ratio inputs must be finite.")
    return r


def reward_risk_batch(spec: RatioSpec, r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Reward and risk for every row of ``r`` (last axis = observations).

    Rows with zero range get risk exactly 0.
    """
    r = _check_batch(r)
    reward, risk = _reward_risk(spec, r)
    constant = np.ptp(r, axis=-1) == 0
    return reward, np.where(constant, 0.0, risk)


def evaluate(spec: RatioSpec, r: np.ndarray) -> RatioValue:
    """Evaluate a performance ratio on one return vector.

    Parameters
    ----------
    spec : RatioSpec
        Ratio kind and tail parameters.
    r : np.ndarray
        Return vector of length D >= 2.

    Returns
    -------
    RatioValue
        ``value = reward / risk``; ``degenerate_flag`` when risk < 0 (the
        raw signed ratio is still returned).

    Raises
    ------
    DegenerateRisk
        If the risk is exactly zero, including any constant vector.
    InsufficientData
        If D < 2.
    NonFiniteInput
        If any return is NaN or infinite.
    """
    r = _check_batch(r)
    if r.ndim != 1:
        raise InsufficientData("evaluate() takes a single return vector.")
    reward, risk = reward_risk_batch(spec, r)
    reward, risk = float(reward), float(risk)
    if risk == 0.0:
        raise DegenerateRisk(f"{spec.token} risk is zero for this return vector.")
    return RatioValue(value=reward / risk, reward=reward, risk=risk, degenerate_flag=risk < 0)


def evaluate_batch(spec: RatioSpec, r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Ratio values for every row; returns ``(values, degenerate)``.

    Rows with zero risk get NaN and are flagged, as are rows with negative risk.
    """
    reward, risk = reward_risk_batch(spec, r)
    with np.errstate(divide="ignore", invalid="ignore"):
        values = np.where(risk != 0, reward / np.where(risk == 0, 1.0, risk), np.nan)
    return values, risk <= 0


# ============================================================================
# Gradients
# ============================================================================


def _gradient(spec: RatioSpec, r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Ratio values and d(ratio)/dr along the last axis (risk must be nonzero)."""
    size = r.shape[-1]
    mean = r.mean(axis=-1, keepdims=True)
    reward, risk = _reward_risk(spec, r)
    reward, risk = reward[..., None], risk[..., None]
    kind = spec.kind
    d_mean = np.full_like(r, 1.0 / size)

    if kind is RatioKind.SHARPE:
        d_risk = (r - mean) / (size * risk)
        d_reward = d_mean
    elif kind is RatioKind.MAD:
        s = np.sign(r - mean)
        d_risk = (s - s.mean(axis=-1, keepdims=True)) / size
        d_reward = d_mean
    elif kind is RatioKind.MINIMAX:
        # Loss term on the first (lowest-index) argmin only
        d_risk = np.zeros_like(r)
        np.put_along_axis(d_risk, r.argmin(axis=-1)[..., None], -1.0, axis=-1)
        d_reward = d_mean
    elif kind is RatioKind.GINI:
        # d/dr_d of sum_{i<j}|r_i - r_j| is sum_j sign(r_d - r_j)
        signs = np.sign(r[..., :, None] - r[..., None, :]).sum(axis=-1)
        d_risk = signs / (size * (size - 1))
        d_reward = d_mean
    else:
        # Tail membership frozen at the current point, stable order positions
        order = np.argsort(r, axis=-1, kind="stable")
        k = tail_count(spec.alpha, size)
        d_risk = np.zeros_like(r)
        np.put_along_axis(d_risk, order[..., :k], -1.0 / k, axis=-1)
        if kind is RatioKind.CVAR:
            d_reward = d_mean
        else:
            u = upper_tail_count(spec.beta, size)
            d_reward = np.zeros_like(r)
            np.put_along_axis(d_reward, order[..., size - u:], 1.0 / u, axis=-1)

    grad = d_reward / risk - reward * d_risk / risk**2
    return (reward / risk)[..., 0], grad


def gradient_batch(spec: RatioSpec, r: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Ratio values and gradients for every row of ``r``.

    Raises
    ------
    DegenerateRisk
        If any row's risk is exactly zero.
    """
    r = _check_batch(r)
    _, risk = reward_risk_batch(spec, r)
    if np.any(risk == 0):
        raise DegenerateRisk(f"{spec.token} risk is zero for {int(np.sum(risk == 0))} row(s).")
    return _gradient(spec, r)


def gradient_wrt_returns(spec: RatioSpec, r: np.ndarray) -> np.ndarray:
    """d(ratio)/dr for one return vector.

    Chaining with the daily asset returns R (D×N) gives d(ratio)/dx = R' g.

    Raises
    ------
    DegenerateRisk
        If the ratio's risk is exactly zero.
    """
    r = _check_batch(r)
    if r.ndim != 1:
        raise InsufficientData("gradient_wrt_returns() takes a single return vector.")
    _, grad = gradient_batch(spec, r)
    return grad


__all__ = [
    "RatioKind",
    "RatioSpec",
    "RatioValue",
    "tail_count",
    "upper_tail_count",
    "empirical_var",
    "expected_tail_loss",
    "upper_tail_mean",
    "reward_risk_batch",
    "evaluate",
    "evaluate_batch",
    "gradient_batch",
    "gradient_wrt_returns",
]
