"""
Benchmark allocation methods
============================

Traditional comparison methods for the network allocator:

- ``var``: monthly moments (mean vector, covariance) estimated from daily
  returns, each scalar moment forecast one month ahead with an AR(1);
  returns simulated from the forecast moments; weights maximize the ratio
  over the simulated sample.
- ``factor``: the same pipeline with moments forecast by a linear
  regression on the state variables.
- ``parametric``: a linear state-to-weight policy fitted by maximizing
  average CRRA utility of daily portfolio returns (two assets).
- ``static:<pct>``: fixed stock/bond weights.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from ..utils.seeding import make_rng
from .config import (
    BENCHMARK_SELECTORS,
    DEFAULT_GAMMA_CRRA,
    FRONTIER_POINTS,
    GRID_STEP,
    PARAMETRIC_RESTARTS,
    PSD_TOLERANCE,
    SIMULATION_DAYS,
    SIMULATION_PATHS,
    STATIC_PRESETS,
)
from .data_io import AlignedDataset, StateSeries
from .errors import (
    ConfigError,
    DegenerateInput,
    DegenerateRisk,
    InsufficientData,
    NonFiniteInput,
    SingularDesign,
)
from .ratios import RatioSpec, evaluate_batch


logger = logging.getLogger(__name__)


# ============================================================================
# Selectors and Settings
# ============================================================================


@dataclass(frozen=True)
class BenchmarkSelector:
    """A parsed benchmark token: ``var``, ``factor``, ``parametric`` or ``static:<pct>``."""

    kind: str
    stock_pct: float | None = None

    @property
    def token(self) -> str:
        if self.kind != "static":
            return self.kind
        return f"static:{self.stock_pct * 100:g}"

    @classmethod
    def parse(cls, token: str) -> "BenchmarkSelector":
        """Parse a selector token.

        ``static:60`` and ``static:0.60`` both mean 60% in the first asset. A
        value written with a decimal point and at most 1 is a fraction; any
        other value is a percentage, so ``static:1`` is 1% and ``static:1.0``
        is 100%. This matches :attr:`token`, which always writes percentages.
        """
        token = token.strip().lower()
        if token in BENCHMARK_SELECTORS:
            return cls(token)
        kind, _, value = token.partition(":")
        if kind != "static" or not value:
            raise ConfigError(
                f"Unknown benchmark '{token}'. Expected one of {', '.join(BENCHMARK_SELECTORS)} or static:<pct>."
            )
        try:
            pct = float(value)
        except ValueError as exc:
            raise ConfigError(f"Invalid static percentage in '{token}'.") from exc
        if not ("." in value and pct <= 1):
            pct /= 100.0
        if not 0 <= pct <= 1:
            raise ConfigError(f"Static percentage must lie in [0, 100], got '{value}'.")
        return cls("static", pct)


def _default_selectors() -> tuple[str, ...]:
    return (*BENCHMARK_SELECTORS, *(f"static:{p * 100:g}" for p in STATIC_PRESETS))


@dataclass(frozen=True)
class BenchmarkConfig:
    """Settings shared by the benchmark methods."""

    selectors: tuple[str, ...] = field(default_factory=_default_selectors)
    gamma: float = DEFAULT_GAMMA_CRRA
    simulation_days: int = SIMULATION_DAYS
    simulation_paths: int = SIMULATION_PATHS
    grid_step: float = GRID_STEP
    frontier_points: int = FRONTIER_POINTS
    restarts: int = PARAMETRIC_RESTARTS

    def __post_init__(self) -> None:
        object.__setattr__(self, "selectors", tuple(self.selectors))
        for token in self.selectors:
            BenchmarkSelector.parse(token)
        if self.gamma <= 0 or self.gamma == 1:
            raise ConfigError("benchmarks.gamma must be positive and different from 1")
        if self.simulation_days < 2 or self.simulation_paths < 1:
            raise ConfigError("benchmarks.simulation_days must be >= 2 and simulation_paths >= 1")
        if not 0 < self.grid_step <= 0.5:
            raise ConfigError("benchmarks.grid_step must lie in (0, 0.5]")
        if self.frontier_points < 2 or self.restarts < 1:
            raise ConfigError("benchmarks.frontier_points must be >= 2 and restarts >= 1")

    @property
    def parsed_selectors(self) -> tuple[BenchmarkSelector, ...]:
        return tuple(BenchmarkSelector.parse(token) for token in self.selectors)

    def to_dict(self) -> dict:
        return {
            "selectors": list(self.selectors),
            "gamma": self.gamma,
            "simulation_days": self.simulation_days,
            "simulation_paths": self.simulation_paths,
            "grid_step": self.grid_step,
            "frontier_points": self.frontier_points,
            "restarts": self.restarts,
        }


# ============================================================================
# Monthly Moments
# ============================================================================


@dataclass(frozen=True)
class MomentSeries:
    """Per-month mean vectors (T, N) and population covariances (T, N, N)."""

    months: np.ndarray
    means: np.ndarray
    covs: np.ndarray

    def __len__(self) -> int:
        return self.means.shape[0]

    @property
    def n_assets(self) -> int:
        return self.means.shape[1]

    def flatten(self) -> np.ndarray:
        """Scalar moment series (T, K): means, then lower-triangular covariance entries."""
        rows, cols = np.tril_indices(self.n_assets)
        return np.column_stack([self.means, self.covs[:, rows, cols]])


def unflatten_moments(vector: np.ndarray, n_assets: int) -> tuple[np.ndarray, np.ndarray]:
    """Inverse of ``MomentSeries.flatten`` for one row: (mean, symmetric cov)."""
    vector = np.asarray(vector, dtype=float)
    rows, cols = np.tril_indices(n_assets)
    if vector.size != n_assets + rows.size:
        raise InsufficientData("Moment vector length does not match the number of assets.")
    cov = np.zeros((n_assets, n_assets))
    cov[rows, cols] = vector[n_assets:]
    cov[cols, rows] = vector[n_assets:]
    return vector[:n_assets].copy(), cov


def monthly_moments(data: AlignedDataset) -> MomentSeries:
    """Mean vector and population covariance of each month's daily returns.

    Keys are the return months of ``data``.
    """
    if len(data) == 0:
        raise InsufficientData("Monthly moments need at least one month.")
    means = np.empty((len(data), data.n_assets))
    covs = np.empty((len(data), data.n_assets, data.n_assets))
    for idx, stacked in data.day_groups():
        centered = stacked - stacked.mean(axis=1, keepdims=True)
        means[idx] = stacked.mean(axis=1)
        covs[idx] = np.einsum("gdi,gdj->gij", centered, centered) / stacked.shape[1]
    return MomentSeries(months=data.return_months, means=means, covs=covs)


def repair_covariance(cov: np.ndarray) -> tuple[np.ndarray, bool]:
    """Symmetrize and clip negative eigenvalues to zero.

    Returns
    -------
    (np.ndarray, bool)
        Repaired matrix and whether an eigenvalue below -1e-10 was clipped.
    """
    cov = np.asarray(cov, dtype=float)
    sym = (cov + cov.T) / 2
    eigenvalues, vectors = np.linalg.eigh(sym)
    if eigenvalues.min() >= 0:
        return sym, False
    repaired = (vectors * np.clip(eigenvalues, 0.0, None)) @ vectors.T
    return (repaired + repaired.T) / 2, bool(eigenvalues.min() < -PSD_TOLERANCE)


@dataclass(frozen=True)
class MomentForecast:
    mean: np.ndarray
    cov: np.ndarray
    repaired: bool = False


# ============================================================================
# Benchmark 1: AR(1) Moments
# ============================================================================


@dataclass(frozen=True)
class AR1Fit:
    """Intercepts and slopes of y_t = a + b y_{t-1}; scalars or one per series."""

    intercept: np.ndarray | float
    slope: np.ndarray | float


def fit_ar1(series: np.ndarray) -> AR1Fit:
    """OLS of y_t on (1, y_{t-1}) for one series (T,) or each column of (T, K).

    A series whose lagged values have zero variance gets slope 0 and the
    series mean as intercept.

    Raises
    ------
    InsufficientData
        With fewer than three observations.
    NonFiniteInput
        On NaN or infinite values.
    """
    y = np.asarray(series, dtype=float)
    if y.ndim not in (1, 2) or y.shape[0] < 3:
        raise InsufficientData("AR(1) fitting needs at least three observations.")
    if not np.all(np.isfinite(y)):
        raise NonFiniteInput("AR(1) series contains non-finite values.")

    lagged, target = y[:-1], y[1:]
    lag_mean, target_mean = lagged.mean(axis=0), target.mean(axis=0)
    sxx = ((lagged - lag_mean) ** 2).sum(axis=0)
    sxy = ((lagged - lag_mean) * (target - target_mean)).sum(axis=0)
    flat = np.ptp(lagged, axis=0) == 0
    slope = np.where(flat, 0.0, sxy / np.where(flat, 1.0, sxx))
    intercept = np.where(flat, y.mean(axis=0), target_mean - slope * lag_mean)
    if y.ndim == 1:
        return AR1Fit(intercept=float(intercept), slope=float(slope))
    return AR1Fit(intercept=intercept, slope=slope)


def predict_ar1(fit: AR1Fit, last_value: np.ndarray | float) -> np.ndarray | float:
    """One-step forecast: intercept + slope * last_value."""
    return fit.intercept + fit.slope * last_value


def fit_var_benchmark(train: AlignedDataset) -> AR1Fit:
    """AR(1) fits for every scalar moment series of a training window."""
    return fit_ar1(monthly_moments(train).flatten())


def forecast_ar1_moments(fit: AR1Fit, last_moments: np.ndarray, n_assets: int) -> MomentForecast:
    """Next month's moments from the latest realized (flattened) moments."""
    mean, cov = unflatten_moments(predict_ar1(fit, np.asarray(last_moments, dtype=float)), n_assets)
    cov, repaired = repair_covariance(cov)
    return MomentForecast(mean=mean, cov=cov, repaired=repaired)


# ============================================================================
# Benchmark 2: Factor-Model Moments
# ============================================================================


@dataclass(frozen=True)
class FactorFit:
    """Regression coefficients (1 + M, K) of each scalar moment on (1, z)."""

    coefficients: np.ndarray
    n_assets: int

    @property
    def intercepts(self) -> np.ndarray:
        return self.coefficients[0]

    @property
    def slopes(self) -> np.ndarray:
        return self.coefficients[1:]


def _design(states: np.ndarray) -> np.ndarray:
    return np.column_stack([np.ones(states.shape[0]), states])


def fit_moment_factor_model(moments: MomentSeries, states: StateSeries | np.ndarray) -> FactorFit:
    """Regress each scalar moment of month t+1 on the states of month t.

    Parameters
    ----------
    moments : MomentSeries
        Moments keyed by return month.
    states : StateSeries | np.ndarray
        State rows aligned with ``moments`` (row i predicts moment row i). A
        ``StateSeries`` must be keyed one month before ``moments``.

    Raises
    ------
    InsufficientData
        If T <= M + 1.
    SingularDesign
        If the design matrix (1, z) is rank deficient.
    """
    if isinstance(states, StateSeries):
        if states.months.size != len(moments) or np.any(states.months + 1 != moments.months.astype("datetime64[M]")):
            raise InsufficientData("State months must precede moment months by exactly one month.")
        values = states.values
    else:
        values = np.asarray(states, dtype=float)
    if values.ndim != 2 or values.shape[0] != len(moments):
        raise InsufficientData("States and moments must have the same number of months.")
    if len(moments) <= values.shape[1] + 1:
        raise InsufficientData(f"Factor model needs more than {values.shape[1] + 1} months, got {len(moments)}.")

    design = _design(values)
    if np.linalg.matrix_rank(design) < design.shape[1]:
        raise SingularDesign("State variables are collinear with each other or the intercept.")
    coefficients, *_ = np.linalg.lstsq(design, moments.flatten(), rcond=None)
    return FactorFit(coefficients=coefficients, n_assets=moments.n_assets)


def predict_factor_moments(fit: FactorFit, z: np.ndarray) -> MomentForecast:
    """Moments implied by one state vector; the covariance is repaired to PSD."""
    z = np.asarray(z, dtype=float)
    vector = np.concatenate([[1.0], z]) @ fit.coefficients
    mean, cov = unflatten_moments(vector, fit.n_assets)
    cov, repaired = repair_covariance(cov)
    if repaired:
        logger.debug("Predicted covariance was not PSD; negative eigenvalues clipped.")
    return MomentForecast(mean=mean, cov=cov, repaired=repaired)


def fit_factor_benchmark(train: AlignedDataset) -> FactorFit:
    """Factor-model fit on a training window (raw states)."""
    return fit_moment_factor_model(monthly_moments(train), train.states)


# ============================================================================
# Simulation and Ratio Maximization
# ============================================================================


def _covariance_factor(cov: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        # Singular PSD matrix: use the symmetric eigen factor instead
        eigenvalues, vectors = np.linalg.eigh(cov)
        return vectors * np.sqrt(np.clip(eigenvalues, 0.0, None))


def simulate_returns(
    mean: np.ndarray, cov: np.ndarray, days: int, seed: int, paths: int = 1
) -> np.ndarray:
    """Draw daily returns from a multivariate normal.

    Daily mean is ``mean / days`` and daily covariance ``cov / days``; draws
    are ``mean/days + L eps`` with L a lower-triangular factor.

    Returns
    -------
    np.ndarray
        Shape (days * paths, N).

    Raises
    ------
    DegenerateInput
        If ``cov`` has an eigenvalue below -1e-10.
    """
    mean = np.asarray(mean, dtype=float)
    cov = np.asarray(cov, dtype=float)
    if days < 1 or paths < 1:
        raise ConfigError("simulate_returns needs positive days and paths.")
    if cov.shape != (mean.size, mean.size):
        raise InsufficientData("Covariance shape does not match the mean vector.")
    if np.linalg.eigvalsh((cov + cov.T) / 2).min() < -PSD_TOLERANCE:
        raise DegenerateInput("Covariance matrix is not positive semidefinite.")

    factor = _covariance_factor((cov + cov.T) / (2 * days))
    shocks = make_rng(seed).standard_normal((days * paths, mean.size))
    return mean / days + shocks @ factor.T


def _frontier_candidates(simulated: np.ndarray, points: int) -> np.ndarray:
    """Long-only minimum-variance portfolios at evenly spaced target returns."""
    n_assets = simulated.shape[1]
    mu = simulated.mean(axis=0)
    sigma = np.cov(simulated, rowvar=False, bias=True)
    start = np.full(n_assets, 1.0 / n_assets)
    bounds = [(0.0, 1.0)] * n_assets

    candidates = []
    for target in np.linspace(mu.min(), mu.max(), points):
        constraints = (
            {"type": "eq", "fun": lambda w: np.sum(w) - 1.0},
            {"type": "eq", "fun": lambda w, t=target: w @ mu - t},
        )
        result = minimize(
            lambda w: w @ sigma @ w,
            start,
            jac=lambda w: 2 * sigma @ w,
            method="SLSQP",
            bounds=bounds,
            constraints=constraints,
        )
        if result.success:
            w = np.clip(result.x, 0.0, None)
            candidates.append(w / w.sum())
    if not candidates:
        raise DegenerateRisk("No frontier portfolio could be solved.")
    return np.array(candidates)


def optimize_weights_grid(
    spec: RatioSpec,
    simulated: np.ndarray,
    grid_step: float = GRID_STEP,
    frontier_points: int = FRONTIER_POINTS,
) -> np.ndarray:
    """Long-only, fully invested weights maximizing the ratio on simulated returns.

    Two assets: grid x in [0, 1] with ``grid_step``. More assets: sweep of
    ``frontier_points`` target returns on the mean-variance frontier. Ties
    go to the candidate closest to equal weights, then the lowest index.

    Raises
    ------
    DegenerateRisk
        If every candidate has non-positive risk.
    """
    simulated = np.asarray(simulated, dtype=float)
    n_assets = simulated.shape[1]
    if n_assets == 2:
        x = np.linspace(0.0, 1.0, int(round(1.0 / grid_step)) + 1)
        candidates = np.column_stack([x, 1.0 - x])
    else:
        candidates = _frontier_candidates(simulated, frontier_points)

    values, degenerate = evaluate_batch(spec, candidates @ simulated.T)
    valid = ~degenerate & np.isfinite(values)
    if not np.any(valid):
        raise DegenerateRisk(f"Every candidate portfolio has non-positive {spec.token} risk.")
    scores = np.where(valid, values, -np.inf)
    best = scores.max()
    tied = np.flatnonzero(valid & np.isclose(scores, best, rtol=1e-12, atol=0.0))
    distance = np.linalg.norm(candidates[tied] - 1.0 / n_assets, axis=1)
    # argmin returns the first (lowest-index) minimum
    return candidates[tied[np.argmin(distance)]].copy()


def moment_benchmark_weights(
    spec: RatioSpec, forecast: MomentForecast, config: BenchmarkConfig, seed: int
) -> np.ndarray:
    """Weights from simulated returns under forecast moments."""
    simulated = simulate_returns(
        forecast.mean, forecast.cov, config.simulation_days, seed, paths=config.simulation_paths
    )
    return optimize_weights_grid(spec, simulated, config.grid_step, config.frontier_points)


# ============================================================================
# Benchmark 3: Parametric CRRA Policy
# ============================================================================


def crra_utility(r: np.ndarray | float, gamma: float) -> np.ndarray | float:
    """CRRA utility of terminal wealth 1 + r: (1 + r)^(1 - gamma) / (1 - gamma).

    Raises
    ------
    NonFiniteInput
        If any r <= -1.
    """
    if gamma <= 0 or gamma == 1:
        raise ConfigError("CRRA risk aversion must be positive and different from 1.")
    wealth = 1.0 + np.asarray(r, dtype=float)
    if np.any(~np.isfinite(wealth)) or np.any(wealth <= 0):
        raise NonFiniteInput("CRRA utility is undefined for returns at or below -100%.")
    utility = wealth ** (1.0 - gamma) / (1.0 - gamma)
    return float(utility) if utility.ndim == 0 else utility


@dataclass(frozen=True)
class ParametricPolicy:
    """Linear policy x = clip(theta0 + theta' z, 0, 1) on standardized states."""

    theta0: float
    theta: np.ndarray
    gamma: float = DEFAULT_GAMMA_CRRA

    def __post_init__(self) -> None:
        object.__setattr__(self, "theta", np.asarray(self.theta, dtype=float))
        if self.gamma <= 0 or self.gamma == 1:
            raise ConfigError("CRRA risk aversion must be positive and different from 1.")

    def to_dict(self) -> dict:
        return {"theta0": self.theta0, "theta": self.theta.tolist(), "gamma": self.gamma}


def _policy_objective(
    params: np.ndarray, data: AlignedDataset, gamma: float, use_states: bool
) -> tuple[float, np.ndarray]:
    """Negative mean utility and its (sub)gradient."""
    theta0, theta = params[0], params[1:] if use_states else np.zeros(data.n_variables)
    linear = theta0 + data.states @ theta
    x = np.clip(linear, 0.0, 1.0)
    active = (linear > 0) & (linear < 1)

    total = 0.0
    d_x = np.empty(len(data))
    for idx, stacked in data.day_groups():
        spread = stacked[..., 0] - stacked[..., 1]
        r = stacked[..., 1] + x[idx, None] * spread
        wealth = 1.0 + r
        if np.any(wealth <= 0):
            raise NonFiniteInput("CRRA utility is undefined at the current policy iterate.")
        total += (wealth ** (1.0 - gamma)).mean(axis=1).sum() / (1.0 - gamma)
        d_x[idx] = (wealth ** (-gamma) * spread).mean(axis=1)

    n_months = len(data)
    d_linear = np.where(active, d_x, 0.0) / n_months
    grad = [d_linear.sum()]
    if use_states:
        grad.extend(data.states.T @ d_linear)
    return -total / n_months, -np.array(grad)


def fit_parametric_policy(
    data: AlignedDataset,
    gamma: float = DEFAULT_GAMMA_CRRA,
    seed: int = 0,
    restarts: int = PARAMETRIC_RESTARTS,
    use_states: bool = True,
) -> ParametricPolicy:
    """Fit the linear CRRA policy on standardized states.

    Maximizes the average over months of the mean daily utility of
    x_t R1 + (1 - x_t) R2 with L-BFGS-B. The first start is the 50/50
    policy with zero slopes; the remaining ``restarts - 1`` starts are drawn
    from the seeded stream. ``use_states=False`` fits theta0 only.

    Raises
    ------
    NonFiniteInput
        If the utility is undefined at some iterate.
    """
    if data.n_assets != 2:
        raise ConfigError("The parametric policy supports exactly two assets.")
    if len(data) == 0:
        raise InsufficientData("Parametric policy fitting needs at least one month.")
    crra_utility(0.0, gamma)

    n_params = 1 + (data.n_variables if use_states else 0)
    rng = make_rng(seed)
    starts = [np.concatenate([[0.5], np.zeros(n_params - 1)])]
    for _ in range(restarts - 1):
        starts.append(np.concatenate([rng.uniform(0.0, 1.0, 1), rng.normal(0.0, 0.5, n_params - 1)]))

    best_value, best_params = np.inf, starts[0]
    for start in starts:
        result = minimize(
            _policy_objective,
            start,
            args=(data, gamma, use_states),
            jac=True,
            method="L-BFGS-B",
            options={"maxiter": 1000, "gtol": 1e-12, "ftol": 1e-15},
        )
        if not np.isfinite(result.fun):
            raise NonFiniteInput("CRRA objective became non-finite.")
        if result.fun < best_value:
            best_value, best_params = result.fun, result.x

    theta = best_params[1:] if use_states else np.zeros(data.n_variables)
    logger.debug("Parametric policy: theta0 %.4f, mean utility %.8f", best_params[0], -best_value)
    return ParametricPolicy(theta0=float(best_params[0]), theta=theta, gamma=gamma)


def apply_parametric_policy(policy: ParametricPolicy, z: np.ndarray) -> np.ndarray:
    """Weights [x, 1 - x] for one standardized state (M,) or a batch (T, M)."""
    z = np.asarray(z, dtype=float)
    x = np.clip(policy.theta0 + z @ policy.theta, 0.0, 1.0)
    return np.stack([x, 1.0 - x], axis=-1)


def static_weights(stock_pct: float) -> np.ndarray:
    """Constant weights [stock_pct, 1 - stock_pct]."""
    if not 0 <= stock_pct <= 1:
        raise ConfigError(f"Static stock percentage must lie in [0, 1], got {stock_pct}.")
    return np.array([stock_pct, 1.0 - stock_pct])


__all__ = [
    "BenchmarkSelector",
    "BenchmarkConfig",
    "MomentSeries",
    "MomentForecast",
    "unflatten_moments",
    "monthly_moments",
    "repair_covariance",
    "AR1Fit",
    "fit_ar1",
    "predict_ar1",
    "fit_var_benchmark",
    "forecast_ar1_moments",
    "FactorFit",
    "fit_moment_factor_model",
    "predict_factor_moments",
    "fit_factor_benchmark",
    "simulate_returns",
    "optimize_weights_grid",
    "moment_benchmark_weights",
    "crra_utility",
    "ParametricPolicy",
    "fit_parametric_policy",
    "apply_parametric_policy",
    "static_weights",
]
