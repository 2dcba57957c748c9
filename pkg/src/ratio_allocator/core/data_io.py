"""
Return panels and state-variable series
=======================================

Loading, validation, month alignment, standardization and synthetic
generation of the two inputs every model in the package consumes:

- ``ReturnPanel``: dated daily simple returns for N assets.
- ``StateSeries``: monthly observations of M state variables.

A state observed in month t is paired with the daily returns of calendar
month t+1 (information available at the end of the previous month).

Files
-----
- ``returns.csv``: ``date,<asset1>,...`` with ISO ``YYYY-MM-DD`` dates.
- ``states.csv``: ``month,<var1>,...`` with ``YYYY-MM`` months.
- ``macro.csv``: ``month,index_level,dividends_12m,baa,aaa,gs10,gs1`` raw
  inputs for ``compute_state_variables``.
"""

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import polars as pl

from ..utils.seeding import make_rng
from .errors import (
    ConfigError,
    DegenerateInput,
    InsufficientData,
    MisalignedDates,
    NonFiniteInput,
)
from .statistics import SummaryStats, summary_statistics


logger = logging.getLogger(__name__)

MONTH_PATTERN = re.compile(r"^\d{4}-\d{2}$")
MACRO_COLUMNS = ("month", "index_level", "dividends_12m", "baa", "aaa", "gs10", "gs1")
STATE_VARIABLE_NAMES = ("default_spread", "term_spread", "dividend_yield", "trend")


# ============================================================================
# Domain Types
# ============================================================================


@dataclass(frozen=True)
class ReturnPanel:
    """Daily simple returns, one row per trading day and one column per asset."""

    dates: np.ndarray
    asset_names: tuple[str, ...]
    returns: np.ndarray

    def __post_init__(self) -> None:
        dates = np.asarray(self.dates, dtype="datetime64[D]")
        returns = np.asarray(self.returns, dtype=float)
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "returns", returns)
        object.__setattr__(self, "asset_names", tuple(self.asset_names))

        if returns.ndim != 2 or returns.shape[0] == 0 or returns.shape[1] < 2:
            raise InsufficientData(
                f"Return panel needs at least 1 day and 2 assets, got shape {returns.shape}."
            )
        if returns.shape != (dates.size, len(self.asset_names)):
            raise InsufficientData("Return matrix shape does not match dates and asset names.")
        if dates.size > 1 and not np.all(np.diff(dates) > np.timedelta64(0, "D")):
            raise MisalignedDates("Return dates must be strictly increasing without duplicates.")
        if not np.all(np.isfinite(returns)):
            raise NonFiniteInput("Return panel contains NaN or infinite values.")
        if np.any(returns <= -1.0):
            raise NonFiniteInput("Return panel contains a return at or below -100%.")

    @property
    def n_assets(self) -> int:
        return self.returns.shape[1]

    @property
    def months(self) -> np.ndarray:
        """Calendar month of every row (``datetime64[M]``)."""
        return self.dates.astype("datetime64[M]")


@dataclass(frozen=True)
class StateSeries:
    """Monthly state variables, one row per consecutive calendar month."""

    months: np.ndarray
    variable_names: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self) -> None:
        months = np.asarray(self.months, dtype="datetime64[M]")
        values = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "months", months)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "variable_names", tuple(self.variable_names))

        if values.ndim != 2 or values.shape[1] < 1 or values.shape[0] < 1:
            raise InsufficientData(f"State series needs M >= 1 and T >= 1, got shape {values.shape}.")
        if values.shape != (months.size, len(self.variable_names)):
            raise InsufficientData("State matrix shape does not match months and variable names.")
        if months.size > 1 and not np.all(np.diff(months) == np.timedelta64(1, "M")):
            raise MisalignedDates("State months must be strictly increasing consecutive calendar months.")
        if not np.all(np.isfinite(values)):
            raise NonFiniteInput("State series contains NaN or infinite values.")

    @property
    def n_variables(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class StandardizationStats:
    """Column means and population standard deviations of a training window."""

    means: np.ndarray
    stddevs: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "means", np.asarray(self.means, dtype=float))
        object.__setattr__(self, "stddevs", np.asarray(self.stddevs, dtype=float))
        if np.any(self.stddevs <= 0):
            raise DegenerateInput("Standardization stddevs must be positive.")

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Standardize raw values (rows are observations)."""
        return (np.asarray(values, dtype=float) - self.means) / self.stddevs

    def to_dict(self) -> dict[str, list[float]]:
        return {"means": self.means.tolist(), "stddevs": self.stddevs.tolist()}

    @classmethod
    def from_dict(cls, payload: dict) -> "StandardizationStats":
        return cls(means=np.array(payload["means"]), stddevs=np.array(payload["stddevs"]))


@dataclass(frozen=True)
class AlignedDataset:
    """(state at month t, daily returns of month t+1) pairs.

    ``states`` holds the raw or standardized state rows; ``month_returns[i]``
    is the D×N block of daily returns following ``month_keys[i]``.
    """

    states: np.ndarray
    month_returns: tuple[np.ndarray, ...]
    month_keys: np.ndarray
    variable_names: tuple[str, ...]
    asset_names: tuple[str, ...]
    _groups: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "states", np.asarray(self.states, dtype=float))
        object.__setattr__(self, "month_keys", np.asarray(self.month_keys, dtype="datetime64[M]"))
        object.__setattr__(self, "month_returns", tuple(np.asarray(r, dtype=float) for r in self.month_returns))
        if len(self.month_returns) != self.states.shape[0] or self.month_keys.size != self.states.shape[0]:
            raise InsufficientData("Aligned dataset sequences must have equal length.")
        if any(r.shape[0] < 2 for r in self.month_returns):
            raise InsufficientData("Every aligned month needs at least two trading days.")

    def __len__(self) -> int:
        return self.states.shape[0]

    @property
    def n_assets(self) -> int:
        return len(self.asset_names)

    @property
    def n_variables(self) -> int:
        return self.states.shape[1]

    @property
    def pairs(self) -> list[tuple[np.ndarray, np.ndarray]]:
        return list(zip(self.states, self.month_returns))

    @property
    def return_months(self) -> np.ndarray:
        """Calendar month of each pair's returns (state month + 1)."""
        return self.month_keys + np.timedelta64(1, "M")

    def subset(self, indices: np.ndarray | list[int] | range) -> "AlignedDataset":
        """Return the pairs at ``indices`` in the given order."""
        idx = np.asarray(list(indices), dtype=int)
        return AlignedDataset(
            states=self.states[idx],
            month_returns=tuple(self.month_returns[i] for i in idx),
            month_keys=self.month_keys[idx],
            variable_names=self.variable_names,
            asset_names=self.asset_names,
        )

    def with_states(self, states: np.ndarray) -> "AlignedDataset":
        """Same returns, replaced state rows (e.g., standardized)."""
        return AlignedDataset(
            states=states,
            month_returns=self.month_returns,
            month_keys=self.month_keys,
            variable_names=self.variable_names,
            asset_names=self.asset_names,
        )

    def day_groups(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """Group months by trading-day count for vectorized evaluation.

        Returns
        -------
        list of (indices, stacked)
            ``stacked`` has shape (G, D, N) for the G months with D days.
        """
        if self._groups is None:
            lengths = np.array([r.shape[0] for r in self.month_returns])
            groups = []
            for days in np.unique(lengths):
                idx = np.flatnonzero(lengths == days)
                groups.append((idx, np.stack([self.month_returns[i] for i in idx])))
            object.__setattr__(self, "_groups", groups)
        return self._groups


@dataclass(frozen=True)
class MacroInputs:
    """Raw monthly series behind the four default state variables."""

    months: np.ndarray
    index_levels: np.ndarray
    dividends_12m: np.ndarray
    baa: np.ndarray
    aaa: np.ndarray
    gs10: np.ndarray
    gs1: np.ndarray


@dataclass(frozen=True)
class SyntheticConfig:
    """Planted two-asset regime data.

    The sign of the ``signal`` state in month t picks the asset with the
    higher daily mean in month t+1 (asset 1 when the signal is >= 0). Other
    state variables are independent standard-normal noise.
    """

    months: int = 216
    days_per_month: int = 21
    n_noise: int = 3
    mean_base: float = 0.0005
    mean_gap: float = 0.004
    volatility: float = 0.01
    signal_floor: float = 0.0
    start_month: str = "1986-01"

    def __post_init__(self) -> None:
        if self.months < 1:
            raise ConfigError("synthetic.months must be >= 1")
        if not 2 <= self.days_per_month <= 28:
            raise ConfigError("synthetic.days_per_month must be in [2, 28]")
        if self.n_noise < 0:
            raise ConfigError("synthetic.n_noise must be >= 0")
        if self.volatility <= 0 or self.mean_gap < 0 or self.signal_floor < 0:
            raise ConfigError("synthetic volatility must be > 0; mean_gap and signal_floor >= 0")
        if not MONTH_PATTERN.match(self.start_month):
            raise ConfigError("synthetic.start_month must look like YYYY-MM")


# ============================================================================
# CSV Ingestion
# ============================================================================


def _read_csv_strings(path: Path | str, first_column: str) -> pl.DataFrame:
    """Read a CSV with every column as text and check the key column name."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Input file not found: {path}")
    df = pl.read_csv(path, infer_schema=False)
    if df.width == 0 or df.columns[0] != first_column:
        raise InsufficientData(f"{path}: header must start with '{first_column}'.")
    return df


def _float_matrix(df: pl.DataFrame, columns: list[str], path: Path | str) -> np.ndarray:
    """Parse text columns as decimal floats; unparsable cells are non-finite."""
    if not columns:
        return np.empty((df.height, 0))
    parsed = df.select(
        [pl.col(c).str.strip_chars().cast(pl.Float64, strict=False).alias(c) for c in columns]
    )
    if parsed.null_count().sum_horizontal().item() > 0:
        raise NonFiniteInput(f"{path}: empty or unparsable numeric cell.")
    values = parsed.to_numpy().astype(float)
    if not np.all(np.isfinite(values)):
        raise NonFiniteInput(f"{path}: NaN or infinite numeric cell.")
    return values


def _parse_months(labels: list[str], path: Path | str) -> np.ndarray:
    bad = [label for label in labels if not MONTH_PATTERN.match(label.strip())]
    if bad:
        raise MisalignedDates(f"{path}: months must be YYYY-MM, got '{bad[0]}'.")
    try:
        return np.array([label.strip() for label in labels], dtype="datetime64[M]")
    except ValueError as exc:
        raise MisalignedDates(f"{path}: invalid calendar month ({exc}).") from exc


def load_returns_csv(path: Path | str) -> ReturnPanel:
    """Load and validate a ``date,<asset>...`` return file.

    Parameters
    ----------
    path : Path | str
        CSV file with ISO dates and decimal simple returns.

    Returns
    -------
    ReturnPanel

    Raises
    ------
    FileNotFoundError
        If the file does not exist.
    MisalignedDates
        On duplicate, unsorted or malformed dates.
    NonFiniteInput
        On NaN/inf/unparsable cells or returns at or below -1.
    InsufficientData
        If there are no rows or fewer than two assets.
    """
    df = _read_csv_strings(path, "date")
    assets = df.columns[1:]
    if df.height == 0 or len(assets) < 2:
        raise InsufficientData(f"{path}: need at least one row and two asset columns.")
    dates = df.select(pl.col("date").str.strip_chars().str.to_date("%Y-%m-%d", strict=False))["date"]
    if dates.null_count() > 0:
        raise MisalignedDates(f"{path}: dates must be ISO YYYY-MM-DD.")
    values = _float_matrix(df, assets, path)
    panel = ReturnPanel(
        dates=dates.to_numpy().astype("datetime64[D]"),
        asset_names=tuple(assets),
        returns=values,
    )
    logger.info("Loaded %s days x %s assets from %s", panel.returns.shape[0], panel.n_assets, path)
    return panel


def load_states_csv(path: Path | str) -> StateSeries:
    """Load and validate a ``month,<var>...`` state file.

    Raises
    ------
    FileNotFoundError, MisalignedDates, NonFiniteInput, InsufficientData
    """
    df = _read_csv_strings(path, "month")
    variables = df.columns[1:]
    if df.height == 0 or not variables:
        raise InsufficientData(f"{path}: need at least one row and one state column.")
    months = _parse_months(df["month"].to_list(), path)
    values = _float_matrix(df, variables, path)
    states = StateSeries(months=months, variable_names=tuple(variables), values=values)
    logger.info("Loaded %s months x %s state variables from %s", values.shape[0], len(variables), path)
    return states


def load_macro_csv(path: Path | str) -> MacroInputs:
    """Load the raw monthly series used by ``compute_state_variables``."""
    df = _read_csv_strings(path, "month")
    missing = [c for c in MACRO_COLUMNS if c not in df.columns]
    if missing:
        raise InsufficientData(f"{path}: missing columns {missing}.")
    months = _parse_months(df["month"].to_list(), path)
    values = _float_matrix(df, list(MACRO_COLUMNS[1:]), path)
    return MacroInputs(months, *(values[:, j] for j in range(values.shape[1])))


def _format_float(value: float) -> str:
    return f"{value:.12g}"


def write_returns_csv(panel: ReturnPanel, path: Path | str) -> Path:
    """Write a panel in the ``returns.csv`` layout (12 significant digits)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    columns = {"date": [str(d) for d in panel.dates]}
    for j, name in enumerate(panel.asset_names):
        columns[name] = [_format_float(v) for v in panel.returns[:, j]]
    pl.DataFrame(columns).write_csv(path)
    return path


def write_states_csv(states: StateSeries, path: Path | str) -> Path:
    """Write a state series in the ``states.csv`` layout."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    columns = {"month": [str(m) for m in states.months]}
    for j, name in enumerate(states.variable_names):
        columns[name] = [_format_float(v) for v in states.values[:, j]]
    pl.DataFrame(columns).write_csv(path)
    return path


# ============================================================================
# State Variables
# ============================================================================


def compute_state_variables(inputs: MacroInputs) -> StateSeries:
    """Build default spread, term spread, dividend yield and trend.

    Parameters
    ----------
    inputs : MacroInputs
        Consecutive monthly series; index levels and trailing dividends > 0.

    Returns
    -------
    StateSeries
        One row per month from the 13th input month on:

        - default_spread = BAA - AAA
        - term_spread = 10y - 1y
        - dividend_yield = ln(100 * dividends_12m / index_level)
        - trend = ln(index_level / mean of the previous 12 levels)

    Raises
    ------
    InsufficientData
        With fewer than 13 months of input.
    NonFiniteInput
        On non-finite values or non-positive levels/dividends.
    MisalignedDates
        If the months are not consecutive.
    """
    months = np.asarray(inputs.months, dtype="datetime64[M]")
    series = [np.asarray(s, dtype=float) for s in (
        inputs.index_levels, inputs.dividends_12m, inputs.baa, inputs.aaa, inputs.gs10, inputs.gs1
    )]
    if any(s.shape != months.shape for s in series):
        raise InsufficientData("Macro series must all have one value per month.")
    if months.size < 13:
        raise InsufficientData("State variables need at least 12 months of history before the first output month.")
    if not np.all(np.diff(months) == np.timedelta64(1, "M")):
        raise MisalignedDates("Macro months must be consecutive.")
    if not all(np.all(np.isfinite(s)) for s in series):
        raise NonFiniteInput("Macro series contain NaN or infinite values.")
    levels, dividends, baa, aaa, gs10, gs1 = series
    if np.any(levels <= 0) or np.any(dividends <= 0):
        raise NonFiniteInput("Index levels and trailing dividends must be positive.")

    # Mean of the 12 levels preceding each month t >= 12
    window = np.lib.stride_tricks.sliding_window_view(levels[:-1], 12).mean(axis=1)
    out = slice(12, None)
    values = np.column_stack(
        [
            baa[out] - aaa[out],
            gs10[out] - gs1[out],
            np.log(100.0 * dividends[out] / levels[out]),
            np.log(levels[out] / window),
        ]
    )
    return StateSeries(months=months[out], variable_names=STATE_VARIABLE_NAMES, values=values)


# ============================================================================
# Alignment and Standardization
# ============================================================================


def align_months(panel: ReturnPanel, states: StateSeries) -> AlignedDataset:
    """Pair each state month t with the daily returns of month t+1.

    State months whose following month has fewer than two return rows
    (including trailing months past the end of the panel) are dropped.

    Raises
    ------
    InsufficientData
        If no complete pair remains.
    """
    panel_months = panel.months
    keep_states, blocks, keys = [], [], []
    for i, month in enumerate(states.months):
        target = month + np.timedelta64(1, "M")
        lo = np.searchsorted(panel_months, target, side="left")
        hi = np.searchsorted(panel_months, target, side="right")
        if hi - lo < 2:
            continue
        keep_states.append(i)
        blocks.append(panel.returns[lo:hi])
        keys.append(month)
    if not keep_states:
        raise InsufficientData("No state month has a following month with at least two return days.")
    dropped = states.months.size - len(keep_states)
    if dropped:
        logger.debug("Dropped %s state months without a complete following return month", dropped)
    return AlignedDataset(
        states=states.values[keep_states],
        month_returns=tuple(blocks),
        month_keys=np.array(keys, dtype="datetime64[M]"),
        variable_names=states.variable_names,
        asset_names=panel.asset_names,
    )


def compute_standardization(values: np.ndarray) -> StandardizationStats:
    """Column means and population stddevs of ``values`` (rows = months)."""
    values = np.asarray(values, dtype=float)
    stddevs = values.std(axis=0)
    constant = np.ptp(values, axis=0) == 0
    if np.any(constant):
        zero = [int(j) for j in np.flatnonzero(constant)]
        raise DegenerateInput(f"Zero-variance state column(s) {zero} cannot be standardized.")
    return StandardizationStats(means=values.mean(axis=0), stddevs=stddevs)


def standardize_states(
    states: StateSeries, stats: StandardizationStats | None = None
) -> tuple[StateSeries, StandardizationStats]:
    """Demean and scale every state column.

    Parameters
    ----------
    states : StateSeries
        Raw states (training window when ``stats`` is None).
    stats : StandardizationStats | None
        Stats from a training window; computed from ``states`` when None.

    Returns
    -------
    (StateSeries, StandardizationStats)

    Raises
    ------
    DegenerateInput
        On a zero-variance column while computing stats.
    ValueError
        If ``stats`` does not match the number of variables.
    """
    if stats is None:
        stats = compute_standardization(states.values)
    elif stats.means.shape != (states.n_variables,):
        raise InsufficientData("Standardization stats do not match the number of state variables.")
    standardized = StateSeries(
        months=states.months, variable_names=states.variable_names, values=stats.apply(states.values)
    )
    return standardized, stats


# ============================================================================
# Synthetic Data
# ============================================================================


def generate_synthetic(config: SyntheticConfig, seed: int) -> tuple[ReturnPanel, StateSeries]:
    """Generate a planted two-asset regime dataset.

    States cover ``config.months`` months starting at ``start_month``;
    returns cover the ``config.months`` following months with
    ``days_per_month`` rows each, so every state month has a return month.

    Parameters
    ----------
    config : SyntheticConfig
    seed : int
        Seed of the Philox stream; identical seeds give identical data.

    Returns
    -------
    (ReturnPanel, StateSeries)
    """
    rng = make_rng(seed)
    n_months, days = config.months, config.days_per_month

    noise = rng.standard_normal((n_months, 1 + config.n_noise))
    signal = noise[:, 0]
    if config.signal_floor > 0:
        signal = np.where(signal >= 0, 1.0, -1.0) * (config.signal_floor + np.abs(signal))
    state_values = np.column_stack([signal, noise[:, 1:]])

    high = config.mean_base + config.mean_gap / 2
    low = config.mean_base - config.mean_gap / 2
    asset_one_high = signal >= 0
    means = np.where(asset_one_high[:, None], [high, low], [low, high])
    shocks = rng.standard_normal((n_months, days, 2))
    returns = (means[:, None, :] + config.volatility * shocks).reshape(n_months * days, 2)

    state_months = np.datetime64(config.start_month, "M") + np.arange(n_months)
    return_months = state_months + np.timedelta64(1, "M")
    dates = (return_months.astype("datetime64[D]")[:, None] + np.arange(days)).reshape(-1)

    variable_names = ("signal", *(f"noise_{k}" for k in range(1, config.n_noise + 1)))
    panel = ReturnPanel(dates=dates, asset_names=("asset_1", "asset_2"), returns=returns)
    states = StateSeries(months=state_months, variable_names=variable_names, values=state_values)
    logger.debug("Generated synthetic data: %s months, %s days/month, seed %s", n_months, days, seed)
    return panel, states


# ============================================================================
# Descriptive Statistics
# ============================================================================


def monthly_compounded_returns(panel: ReturnPanel) -> tuple[np.ndarray, np.ndarray]:
    """Compound daily returns into calendar-month returns per asset.

    Returns
    -------
    (months, returns)
        ``months`` as ``datetime64[M]``; ``returns`` shape (n_months, N).
    """
    months = panel.months
    unique, starts = np.unique(months, return_index=True)
    growth = np.log1p(panel.returns)
    sums = np.add.reduceat(growth, starts, axis=0)
    return unique, np.expm1(sums)


def describe_panel(panel: ReturnPanel) -> dict[str, SummaryStats]:
    """Summary statistics of monthly compounded returns per asset."""
    _, monthly = monthly_compounded_returns(panel)
    return {name: summary_statistics(monthly[:, j]) for j, name in enumerate(panel.asset_names)}


def describe_states(states: StateSeries) -> dict[str, SummaryStats]:
    """Summary statistics of each raw state variable."""
    return {name: summary_statistics(states.values[:, j]) for j, name in enumerate(states.variable_names)}


__all__ = [
    "ReturnPanel",
    "StateSeries",
    "StandardizationStats",
    "AlignedDataset",
    "MacroInputs",
    "SyntheticConfig",
    "STATE_VARIABLE_NAMES",
    "load_returns_csv",
    "load_states_csv",
    "load_macro_csv",
    "write_returns_csv",
    "write_states_csv",
    "compute_state_variables",
    "align_months",
    "compute_standardization",
    "standardize_states",
    "generate_synthetic",
    "monthly_compounded_returns",
    "describe_panel",
    "describe_states",
]
