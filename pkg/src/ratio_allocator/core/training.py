"""
Network training
================

Maximizes the averaged Lagrangian objective over a training window

    L(W, mu) = (1/T) * sum_t [ psi(x_t' R_{t+1}) + mu * (x_t' e - 1) ],   x_t = net(z_t)

by full-batch gradient steps with the decaying rate gamma_i = gamma_0 / (1 + i).
``psi`` is evaluated on the daily portfolio returns of each month. The
network weights always ascend; the multiplier ascends (as the algorithm is
usually written) or descends (the saddle-point variant) per
``TrainConfig.multiplier_update``.

A positive ``TrainConfig.penalty`` (rho) adds the augmented-Lagrangian term
-(rho/2) * (1/T) * sum_t (x_t' e - 1)^2, which damps the multiplier
oscillation and pulls every month onto the budget. The default 0 keeps the
plain Lagrangian.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from ..utils.seeding import derive_run_seed
from .config import (
    DEFAULT_CONSTRAINT_TOL,
    DEFAULT_CV_FOLDS,
    DEFAULT_GAMMA0,
    DEFAULT_HIDDEN_GRID,
    DEFAULT_IMPROVEMENT_TOL,
    DEFAULT_MAX_ITERS,
    DEFAULT_PATIENCE,
    DEFAULT_SEED,
    MIN_TRAIN_MONTHS,
)
from .data_io import AlignedDataset, StandardizationStats, compute_standardization
from .errors import ConfigError, DegenerateRisk, InsufficientData, ObjectiveDiverged
from .network import (
    NetworkParams,
    NetworkShape,
    OutputMode,
    ParamGradients,
    backward,
    forward,
    init,
)
from .ratios import RatioSpec, evaluate_batch, gradient_batch, reward_risk_batch


logger = logging.getLogger(__name__)

LOG_EVERY = 500


class MultiplierUpdate(str, Enum):
    ASCENT = "ascent"
    DESCENT = "descent"


@dataclass(frozen=True)
class TrainConfig:
    """Optimizer and model-selection settings."""

    gamma0: float = DEFAULT_GAMMA0
    max_iters: int = DEFAULT_MAX_ITERS
    patience: int = DEFAULT_PATIENCE
    improvement_tol: float = DEFAULT_IMPROVEMENT_TOL
    seed: int = DEFAULT_SEED
    hidden_grid: tuple[int, ...] = DEFAULT_HIDDEN_GRID
    cv_folds: int = DEFAULT_CV_FOLDS
    constraint_tol: float = DEFAULT_CONSTRAINT_TOL
    multiplier_update: MultiplierUpdate = MultiplierUpdate.ASCENT
    penalty: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "hidden_grid", tuple(int(h) for h in self.hidden_grid))
        object.__setattr__(self, "multiplier_update", MultiplierUpdate(self.multiplier_update))
        if self.gamma0 <= 0:
            raise ConfigError("training.gamma0 must be positive")
        if self.max_iters < 1 or self.patience < 1:
            raise ConfigError("training.max_iters and training.patience must be positive")
        if self.improvement_tol <= 0 or self.constraint_tol <= 0:
            raise ConfigError("training tolerances must be positive")
        if not self.hidden_grid or min(self.hidden_grid) < 1:
            raise ConfigError("training.hidden_grid must list positive hidden-layer sizes")
        if len(self.hidden_grid) > 1 and self.cv_folds < 2:
            raise ConfigError("training.cv_folds must be >= 2 when hidden_grid has several entries")
        if self.penalty < 0:
            raise ConfigError("training.penalty must be non-negative")

    def to_dict(self) -> dict:
        return {
            "gamma0": self.gamma0,
            "max_iters": self.max_iters,
            "patience": self.patience,
            "improvement_tol": self.improvement_tol,
            "seed": self.seed,
            "hidden_grid": list(self.hidden_grid),
            "cv_folds": self.cv_folds,
            "constraint_tol": self.constraint_tol,
            "multiplier_update": self.multiplier_update.value,
            "penalty": self.penalty,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "TrainConfig":
        return cls(**{**payload, "hidden_grid": tuple(payload["hidden_grid"])})


@dataclass(frozen=True)
class TrainedModel:
    """A trained network with the ratio and standardization it was fit with."""

    params: NetworkParams
    spec: RatioSpec
    stats: StandardizationStats
    objective_trace: tuple[float, ...]
    converged: bool
    constraint_residual: float
    stop_reason: str
    seed: int
    config: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self) -> None:
        if not self.objective_trace:
            raise InsufficientData("A trained model needs a non-empty objective trace.")

    def to_dict(self) -> dict:
        return {
            "network": self.params.to_dict(),
            "seed": self.seed,
            "standardization": self.stats.to_dict(),
            "spec": self.spec.to_dict(),
            "config": self.config.to_dict(),
            "objective_trace": list(self.objective_trace),
            "converged": self.converged,
            "constraint_residual": self.constraint_residual,
            "stop_reason": self.stop_reason,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "TrainedModel":
        return cls(
            params=NetworkParams.from_dict(payload["network"]),
            spec=RatioSpec.from_dict(payload["spec"]),
            stats=StandardizationStats.from_dict(payload["standardization"]),
            objective_trace=tuple(payload["objective_trace"]),
            converged=payload["converged"],
            constraint_residual=payload["constraint_residual"],
            stop_reason=payload["stop_reason"],
            seed=payload["seed"],
            config=TrainConfig.from_dict(payload["config"]),
        )


# ============================================================================
# Objective
# ============================================================================


def portfolio_returns(data: AlignedDataset, weights: np.ndarray) -> list[np.ndarray]:
    """Daily portfolio returns of every month for per-month weights (T, N)."""
    return [block @ w for block, w in zip(data.month_returns, weights)]


def monthly_ratio_values(spec: RatioSpec, data: AlignedDataset, weights: np.ndarray) -> np.ndarray:
    """Ratio value of each month's daily portfolio returns.

    Raises
    ------
    DegenerateRisk
        If any month's risk is exactly zero.
    """
    values = np.empty(len(data))
    for idx, stacked in data.day_groups():
        r = np.einsum("gdn,gn->gd", stacked, weights[idx])
        reward, risk = reward_risk_batch(spec, r)
        if np.any(risk == 0):
            raise DegenerateRisk(f"{spec.token} risk is zero in {int(np.sum(risk == 0))} month(s).")
        values[idx] = reward / risk
    return values


def lagrangian_objective(
    params: NetworkParams, data: AlignedDataset, spec: RatioSpec, penalty: float = 0.0
) -> float:
    """Average Lagrangian over the months of ``data`` (states standardized).

    Returns
    -------
    float
        mean_t psi(x_t' R_{t+1}) + mu * mean_t (x_t' e - 1) - (penalty / 2) * mean_t (x_t' e - 1)^2
    """
    if len(data) == 0:
        raise InsufficientData("Objective needs at least one month.")
    weights = forward(params, data.states)
    ratios = monthly_ratio_values(spec, data, weights)
    residual = weights.sum(axis=1) - 1.0
    return float(ratios.mean() + params.mu * residual.mean() - 0.5 * penalty * np.mean(residual**2))


def objective_and_gradient(
    params: NetworkParams, data: AlignedDataset, spec: RatioSpec, penalty: float = 0.0
) -> tuple[float, ParamGradients]:
    """Objective value and its gradient with respect to every parameter.

    The ratio gradient d(psi)/dr is chained through r = R x into
    d(psi)/dx = R' d(psi)/dr, the multiplier adds mu to every output, the
    quadratic penalty adds -penalty * (x_t' e - 1), and the network
    backpropagates the averaged upstream. d/d(mu) is the mean budget residual.
    """
    n_months = len(data)
    weights = forward(params, data.states)
    ratios = np.empty(n_months)
    upstream = np.empty_like(weights)
    for idx, stacked in data.day_groups():
        r = np.einsum("gdn,gn->gd", stacked, weights[idx])
        values, grad_r = gradient_batch(spec, r)
        ratios[idx] = values
        upstream[idx] = np.einsum("gd,gdn->gn", grad_r, stacked)

    residual = weights.sum(axis=1) - 1.0
    value = float(ratios.mean() + params.mu * residual.mean() - 0.5 * penalty * np.mean(residual**2))
    upstream += params.mu - penalty * residual[:, None]
    grads = backward(params, data.states, upstream / n_months)
    return value, grads.with_mu(residual.mean())


def learning_rate(iteration: int, gamma0: float) -> float:
    """Step size gamma_i = gamma_0 / (1 + i)."""
    if iteration < 0:
        raise ConfigError("iteration must be non-negative")
    return gamma0 / (1.0 + iteration)


def constraint_residual(params: NetworkParams, data: AlignedDataset) -> float:
    """Mean absolute budget residual |x_t' e - 1| over the months of ``data``."""
    weights = forward(params, data.states)
    return float(np.abs(weights.sum(axis=1) - 1.0).mean())


# ============================================================================
# Training Loop
# ============================================================================


def _check_inputs(data: AlignedDataset, shape: NetworkShape) -> None:
    if len(data) < MIN_TRAIN_MONTHS:
        raise InsufficientData(f"Training needs at least {MIN_TRAIN_MONTHS} months, got {len(data)}.")
    if shape.inputs != data.n_variables or shape.n_assets != data.n_assets:
        raise ConfigError(
            f"Network shape (M={shape.inputs}, N={shape.n_assets}) does not match data "
            f"(M={data.n_variables}, N={data.n_assets})."
        )


def _ascend(
    data: AlignedDataset,
    spec: RatioSpec,
    shape: NetworkShape,
    config: TrainConfig,
    seed: int,
) -> tuple[NetworkParams, list[float], str]:
    """Run the gradient loop; returns final parameters, trace and stop reason."""
    params = init(shape, seed)
    mu_sign = 1.0 if config.multiplier_update is MultiplierUpdate.ASCENT else -1.0
    trace: list[float] = []
    best = -np.inf
    since_best = 0
    stop_reason = "max_iters"

    for iteration in range(config.max_iters):
        value, grads = objective_and_gradient(params, data, spec, penalty=config.penalty)
        if not np.isfinite(value) or not np.all(np.isfinite(grads.to_vector())):
            raise ObjectiveDiverged(f"Objective became non-finite at iteration {iteration}.")
        trace.append(value)

        if value > best + config.improvement_tol:
            best = value
            since_best = 0
        else:
            since_best += 1
            if since_best >= config.patience:
                stop_reason = "patience"
                break

        params = params.ascend(grads, learning_rate(iteration, config.gamma0), mu_sign=mu_sign)
        if not params.is_finite():
            raise ObjectiveDiverged(f"Parameters became non-finite at iteration {iteration}.")
        if iteration % LOG_EVERY == 0:
            logger.debug("iter %s objective %.6f mu %.4f", iteration, value, params.mu)

    return params, trace, stop_reason


def train(
    data: AlignedDataset,
    spec: RatioSpec,
    shape: NetworkShape,
    config: TrainConfig,
    stats: StandardizationStats,
    seed: int | None = None,
) -> TrainedModel:
    """Train one network on a standardized training window.

    Parameters
    ----------
    data : AlignedDataset
        Training months with states standardized by ``stats``.
    spec : RatioSpec
        Ratio maximized inside the objective.
    shape : NetworkShape
        Layer sizes; inputs/assets must match ``data``.
    config : TrainConfig
        Optimizer settings.
    stats : StandardizationStats
        Standardization applied to ``data`` (stored with the model).
    seed : int | None
        Initialization seed; defaults to ``config.seed``.

    Returns
    -------
    TrainedModel
        ``converged`` is True when the final mean budget residual is within
        ``config.constraint_tol``.

    Raises
    ------
    InsufficientData
        With fewer than 12 training months.
    DegenerateRisk
        If a month's ratio risk is exactly zero.
    ObjectiveDiverged
        If the objective or parameters become non-finite.
    """
    _check_inputs(data, shape)
    seed = config.seed if seed is None else seed
    params, trace, stop_reason = _ascend(data, spec, shape, config, seed)
    residual = constraint_residual(params, data)
    converged = residual <= config.constraint_tol
    logger.info(
        "Trained %s network H=%s: %s iterations (%s), objective %.6f, residual %.4g%s",
        spec.token,
        shape.hidden,
        len(trace),
        stop_reason,
        trace[-1],
        residual,
        "" if converged else " (budget constraint not met)",
    )
    return TrainedModel(
        params=params,
        spec=spec,
        stats=stats,
        objective_trace=tuple(trace),
        converged=converged,
        constraint_residual=residual,
        stop_reason=stop_reason,
        seed=seed,
        config=config,
    )


# ============================================================================
# Model Selection
# ============================================================================


def _fold_blocks(n_months: int, folds: int) -> list[np.ndarray]:
    blocks = np.array_split(np.arange(n_months), folds)
    if any(block.size == 0 for block in blocks) or n_months - max(b.size for b in blocks) < MIN_TRAIN_MONTHS:
        raise InsufficientData(
            f"{n_months} months cannot be split into {folds} folds with {MIN_TRAIN_MONTHS}+ training months each."
        )
    return blocks


def cross_validation_scores(
    data: AlignedDataset, spec: RatioSpec, shape: NetworkShape, config: TrainConfig
) -> dict[int, float]:
    """Average held-out mean monthly ratio for every hidden size in the grid.

    Folds are contiguous blocks in time order; fold f of grid point g trains
    with seed ``seed + f*10007 + g``.
    """
    blocks = _fold_blocks(len(data), config.cv_folds)
    scores: dict[int, float] = {}
    for grid_index, hidden in enumerate(config.hidden_grid):
        fold_scores = []
        for fold_index, held_out in enumerate(blocks):
            train_idx = np.concatenate([b for k, b in enumerate(blocks) if k != fold_index])
            fold_shape = shape.with_hidden(hidden)
            params, _, _ = _ascend(
                data.subset(train_idx),
                spec,
                fold_shape,
                config,
                derive_run_seed(config.seed, fold_index, grid_index),
            )
            test = data.subset(held_out)
            values, _ = evaluate_batch_months(spec, test, forward(params, test.states))
            fold_scores.append(float(np.nanmean(values)) if np.any(np.isfinite(values)) else -np.inf)
        scores[hidden] = float(np.mean(fold_scores))
        logger.debug("CV %s H=%s score %.6f", spec.token, hidden, scores[hidden])
    return scores


def cross_validate(
    data: AlignedDataset, spec: RatioSpec, config: TrainConfig, shape: NetworkShape
) -> int:
    """Pick the hidden size with the best held-out score (ties -> smallest H)."""
    if len(config.hidden_grid) == 1:
        return config.hidden_grid[0]
    scores = cross_validation_scores(data, spec, shape, config)
    best = max(scores.values())
    chosen = min(h for h, s in scores.items() if s == best)
    logger.info("Cross-validation picked H=%s for %s (score %.6f)", chosen, spec.token, best)
    return chosen


def evaluate_batch_months(
    spec: RatioSpec, data: AlignedDataset, weights: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Per-month ratio values and degenerate flags; zero-risk months are NaN."""
    values = np.empty(len(data))
    flags = np.zeros(len(data), dtype=bool)
    for idx, stacked in data.day_groups():
        r = np.einsum("gdn,gn->gd", stacked, weights[idx])
        values[idx], flags[idx] = evaluate_batch(spec, r)
    return values, flags


def fit_window(
    raw: AlignedDataset,
    spec: RatioSpec,
    shape: NetworkShape,
    config: TrainConfig,
    seed: int | None = None,
) -> TrainedModel:
    """Standardize a raw training window, choose H, and train.

    The window's own mean/stddev become the model's standardization.
    """
    stats = compute_standardization(raw.states)
    data = raw.with_states(stats.apply(raw.states))
    run_config = config if seed is None else _with_seed(config, seed)
    hidden = cross_validate(data, spec, run_config, shape)
    return train(data, spec, shape.with_hidden(hidden), run_config, stats)


def _with_seed(config: TrainConfig, seed: int) -> TrainConfig:
    return TrainConfig.from_dict({**config.to_dict(), "seed": seed})


# ============================================================================
# Prediction
# ============================================================================


def predict_weights_batch(model: TrainedModel, z_raw: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Weights for raw state rows, with renormalization flags.

    In lagrangian mode, rows whose weights sum differs from 1 by more than
    the model's constraint tolerance are divided by their sum and flagged.
    """
    z = model.stats.apply(np.atleast_2d(z_raw))
    weights = forward(model.params, z)
    flags = np.zeros(weights.shape[0], dtype=bool)
    if model.params.shape.output_mode is OutputMode.LAGRANGIAN:
        sums = weights.sum(axis=1)
        flags = np.abs(sums - 1.0) > model.config.constraint_tol
        weights = np.where(flags[:, None], weights / sums[:, None], weights)
    return weights, flags


def predict_weights(model: TrainedModel, z_raw: np.ndarray) -> np.ndarray:
    """Portfolio weights for one raw state vector (standardized with the model's stats)."""
    weights, _ = predict_weights_batch(model, np.asarray(z_raw, dtype=float)[None, :])
    return weights[0]


__all__ = [
    "MultiplierUpdate",
    "TrainConfig",
    "TrainedModel",
    "portfolio_returns",
    "monthly_ratio_values",
    "lagrangian_objective",
    "objective_and_gradient",
    "learning_rate",
    "constraint_residual",
    "train",
    "cross_validation_scores",
    "cross_validate",
    "evaluate_batch_months",
    "fit_window",
    "predict_weights_batch",
    "predict_weights",
]
