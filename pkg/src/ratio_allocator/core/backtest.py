"""
Walk-forward backtests
======================

Rolling train/test schedules, out-of-sample evaluation of the network and
benchmark allocators, summary statistics, paired significance tests and
ratio rankings.

Month keys throughout are return months: a report row for month t holds
the weights chosen with the state observed at the end of month t - 1 and
the daily returns realized during month t.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from ..utils.seeding import derive_window_seed
from .benchmarks import (
    BenchmarkConfig,
    BenchmarkSelector,
    apply_parametric_policy,
    fit_factor_benchmark,
    fit_parametric_policy,
    fit_var_benchmark,
    forecast_ar1_moments,
    moment_benchmark_weights,
    monthly_moments,
    predict_factor_moments,
    static_weights,
)
from .config import CANONICAL_RATIO_ORDER, DEFAULT_TEST_LEN, DEFAULT_TRAIN_LEN
from .data_io import AlignedDataset, compute_standardization
from .errors import ConfigError, DegenerateInput, InsufficientData, MisalignedDates
from .network import NetworkShape
from .ratios import RatioSpec
from .statistics import SummaryStats, summary_statistics
from .training import (
    TrainConfig,
    TrainedModel,
    evaluate_batch_months,
    fit_window,
    portfolio_returns,
    predict_weights_batch,
)


logger = logging.getLogger(__name__)


# ============================================================================
# Rolling Schedule
# ============================================================================


@dataclass(frozen=True)
class RollingWindow:
    """One train/test split; ``*_slice`` index the schedule's month keys."""

    index: int
    train_start: np.datetime64
    train_end: np.datetime64
    test_start: np.datetime64
    test_end: np.datetime64
    train_slice: slice
    test_slice: slice

    @property
    def label(self) -> str:
        return f"{self.test_start}..{self.test_end}"

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "train_start": str(self.train_start),
            "train_end": str(self.train_end),
            "test_start": str(self.test_start),
            "test_end": str(self.test_end),
        }


@dataclass(frozen=True)
class RollingSchedule:
    windows: tuple[RollingWindow, ...]
    train_len: int
    test_len: int
    months: np.ndarray = field(repr=False)

    @property
    def test_months(self) -> np.ndarray:
        return np.concatenate([self.months[w.test_slice] for w in self.windows])


def build_schedule(
    months: np.ndarray, train_len: int = DEFAULT_TRAIN_LEN, test_len: int = DEFAULT_TEST_LEN
) -> RollingSchedule:
    """Partition ordered months into rolling train/test windows.

    The first training window starts at the first month; windows advance
    by ``test_len``; a trailing test window shorter than ``test_len`` is
    dropped.

    Raises
    ------
    InsufficientData
        If fewer than ``train_len + test_len`` months are given.
    """
    months = np.asarray(months, dtype="datetime64[M]")
    if train_len < 1 or test_len < 1:
        raise ConfigError("schedule.train_len and schedule.test_len must be positive")
    if months.size > 1 and np.any(np.diff(months) <= np.timedelta64(0, "M")):
        raise MisalignedDates("Schedule months must be strictly increasing.")
    count = (months.size - train_len) // test_len
    if count < 1:
        raise InsufficientData(
            f"{months.size} months cannot hold a {train_len}-month training and {test_len}-month test window."
        )

    windows = []
    for w in range(count):
        start = w * test_len
        train = slice(start, start + train_len)
        test = slice(start + train_len, start + train_len + test_len)
        windows.append(
            RollingWindow(
                index=w,
                train_start=months[train.start],
                train_end=months[train.stop - 1],
                test_start=months[test.start],
                test_end=months[test.stop - 1],
                train_slice=train,
                test_slice=test,
            )
        )
    logger.debug("Built %s rolling window(s) over %s months", count, months.size)
    return RollingSchedule(windows=tuple(windows), train_len=train_len, test_len=test_len, months=months)


def schedule_for(data: AlignedDataset, train_len: int, test_len: int) -> RollingSchedule:
    """Schedule over the return months of ``data``."""
    return build_schedule(data.return_months, train_len, test_len)


def _window_indices(data: AlignedDataset, schedule: RollingSchedule, part: slice) -> np.ndarray:
    keys = schedule.months[part]
    positions = np.searchsorted(data.return_months, keys)
    if np.any(positions >= len(data)) or np.any(data.return_months[np.minimum(positions, len(data) - 1)] != keys):
        raise MisalignedDates("Schedule months are not covered by the dataset.")
    return positions


# ============================================================================
# Reports
# ============================================================================


@dataclass(frozen=True)
class BacktestReport:
    """Out-of-sample results of one method under one ratio."""

    method: str
    spec: RatioSpec
    months: np.ndarray
    weights: np.ndarray
    daily_returns: tuple[np.ndarray, ...]
    ratio_values: np.ndarray
    degenerate_flags: np.ndarray
    renormalized_flags: np.ndarray
    window_index: np.ndarray
    windows: tuple[RollingWindow, ...] = ()

    def __post_init__(self) -> None:
        n = len(self.months)
        lengths = {
            len(self.weights),
            len(self.daily_returns),
            len(self.ratio_values),
            len(self.degenerate_flags),
            len(self.renormalized_flags),
            len(self.window_index),
        }
        if lengths != {n}:
            raise InsufficientData("Backtest report sequences must have equal length.")

    def __len__(self) -> int:
        return len(self.months)

    @property
    def monthly_returns(self) -> np.ndarray:
        """Mean daily portfolio return of each month."""
        return np.array([r.mean() for r in self.daily_returns])

    @property
    def compounded_returns(self) -> np.ndarray:
        """Compounded portfolio return over each month's trading days."""
        return np.array([np.expm1(np.log1p(r).sum()) for r in self.daily_returns])

    @property
    def degenerate_count(self) -> int:
        return int(self.degenerate_flags.sum())

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "spec": self.spec.to_dict(),
            "months": [str(m) for m in self.months],
            "weights": self.weights.tolist(),
            "daily_returns": [r.tolist() for r in self.daily_returns],
            "ratio_values": [None if np.isnan(v) else float(v) for v in self.ratio_values],
            "degenerate_flags": self.degenerate_flags.tolist(),
            "renormalized_flags": self.renormalized_flags.tolist(),
            "window_index": self.window_index.tolist(),
            "windows": [w.to_dict() for w in self.windows],
            "degenerate_count": self.degenerate_count,
            "renormalized_count": int(self.renormalized_flags.sum()),
            "summary": _summary_dict(self.ratio_values),
            "subperiod_summaries": {
                w.label: _summary_dict(self.ratio_values[self.window_index == w.index]) for w in self.windows
            },
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "BacktestReport":
        months = np.array(payload["months"], dtype="datetime64[M]")
        windows = []
        for w in payload.get("windows", []):
            positions = np.flatnonzero(np.array(payload["window_index"]) == w["index"])
            windows.append(
                RollingWindow(
                    index=w["index"],
                    train_start=np.datetime64(w["train_start"], "M"),
                    train_end=np.datetime64(w["train_end"], "M"),
                    test_start=np.datetime64(w["test_start"], "M"),
                    test_end=np.datetime64(w["test_end"], "M"),
                    train_slice=slice(0, 0),
                    test_slice=slice(int(positions[0]), int(positions[-1]) + 1) if positions.size else slice(0, 0),
                )
            )
        return cls(
            method=payload["method"],
            spec=RatioSpec.from_dict(payload["spec"]),
            months=months,
            weights=np.array(payload["weights"], dtype=float),
            daily_returns=tuple(np.array(r, dtype=float) for r in payload["daily_returns"]),
            ratio_values=np.array([np.nan if v is None else v for v in payload["ratio_values"]], dtype=float),
            degenerate_flags=np.array(payload["degenerate_flags"], dtype=bool),
            renormalized_flags=np.array(payload["renormalized_flags"], dtype=bool),
            window_index=np.array(payload["window_index"], dtype=int),
            windows=tuple(windows),
        )


def _summary_dict(values: np.ndarray) -> dict | None:
    finite = values[np.isfinite(values)]
    if finite.size < 2:
        return None
    return summary_statistics(finite).to_dict()


def evaluate_weights(
    method: str,
    spec: RatioSpec,
    test: AlignedDataset,
    weights: np.ndarray,
    window: RollingWindow,
    renormalized: np.ndarray | None = None,
) -> BacktestReport:
    """Apply per-month weights to realized daily returns of a test window."""
    weights = np.asarray(weights, dtype=float)
    values, degenerate = evaluate_batch_months(spec, test, weights)
    return BacktestReport(
        method=method,
        spec=spec,
        months=test.return_months,
        weights=weights,
        daily_returns=tuple(portfolio_returns(test, weights)),
        ratio_values=values,
        degenerate_flags=degenerate,
        renormalized_flags=np.zeros(len(test), dtype=bool) if renormalized is None else renormalized,
        window_index=np.full(len(test), window.index),
        windows=(window,),
    )


def concatenate_reports(reports: list[BacktestReport]) -> BacktestReport:
    """Join per-window reports of one method in schedule order."""
    if not reports:
        raise InsufficientData("No window reports to concatenate.")
    first = reports[0]
    return BacktestReport(
        method=first.method,
        spec=first.spec,
        months=np.concatenate([r.months for r in reports]),
        weights=np.concatenate([r.weights for r in reports]),
        daily_returns=tuple(d for r in reports for d in r.daily_returns),
        ratio_values=np.concatenate([r.ratio_values for r in reports]),
        degenerate_flags=np.concatenate([r.degenerate_flags for r in reports]),
        renormalized_flags=np.concatenate([r.renormalized_flags for r in reports]),
        window_index=np.concatenate([r.window_index for r in reports]),
        windows=tuple(w for r in reports for w in r.windows),
    )


# ============================================================================
# Walk-Forward Runs
# ============================================================================


def train_windows(
    schedule: RollingSchedule,
    data: AlignedDataset,
    spec: RatioSpec,
    shape: NetworkShape,
    config: TrainConfig,
) -> list[TrainedModel]:
    """Train one network per window; window w uses seed ``seed + w*7919``."""
    models = []
    for window in schedule.windows:
        train = data.subset(_window_indices(data, schedule, window.train_slice))
        logger.info("Training %s network for window %s (%s)", spec.token, window.index, window.label)
        models.append(fit_window(train, spec, shape, config, seed=derive_window_seed(config.seed, window.index)))
    return models


def run_ann(
    schedule: RollingSchedule,
    data: AlignedDataset,
    spec: RatioSpec,
    shape: NetworkShape,
    config: TrainConfig,
    models: list[TrainedModel] | None = None,
) -> BacktestReport:
    """Out-of-sample report of the network allocator.

    Each test month's weights come from the window's trained network
    applied to the raw state observed before the month (standardized with
    the training window's stats). ``models`` skips training when given.
    """
    if models is None:
        models = train_windows(schedule, data, spec, shape, config)
    if len(models) != len(schedule.windows):
        raise ConfigError(f"Expected {len(schedule.windows)} trained models, got {len(models)}.")

    parts = []
    for window, model in zip(schedule.windows, models):
        test = data.subset(_window_indices(data, schedule, window.test_slice))
        weights, renormalized = predict_weights_batch(model, test.states)
        if renormalized.any():
            logger.warning(
                "Window %s: %s month(s) had weights renormalized to sum to one",
                window.index,
                int(renormalized.sum()),
            )
        parts.append(evaluate_weights("ann", spec, test, weights, window, renormalized))
    return concatenate_reports(parts)


def _benchmark_window_weights(
    selector: BenchmarkSelector,
    spec: RatioSpec,
    data: AlignedDataset,
    train_idx: np.ndarray,
    test_idx: np.ndarray,
    window_seed: int,
    seed: int,
    config: BenchmarkConfig,
) -> np.ndarray:
    train = data.subset(train_idx)
    if selector.kind == "static":
        if data.n_assets != 2:
            raise ConfigError("Static benchmarks are defined for two assets.")
        return np.tile(static_weights(selector.stock_pct), (test_idx.size, 1))

    if selector.kind == "parametric":
        stats_ = compute_standardization(train.states)
        policy = fit_parametric_policy(
            train.with_states(stats_.apply(train.states)),
            gamma=config.gamma,
            seed=window_seed,
            restarts=config.restarts,
        )
        return apply_parametric_policy(policy, stats_.apply(data.states[test_idx]))

    if selector.kind == "var":
        fit = fit_var_benchmark(train)
        # Moments realized in the month before each test month
        realized = monthly_moments(data.subset(test_idx - 1)).flatten()
        forecasts = [forecast_ar1_moments(fit, row, data.n_assets) for row in realized]
    else:
        fit = fit_factor_benchmark(train)
        forecasts = [predict_factor_moments(fit, data.states[i]) for i in test_idx]

    return np.array(
        [
            moment_benchmark_weights(spec, forecast, config, seed + int(i))
            for forecast, i in zip(forecasts, test_idx)
        ]
    )


def run_benchmark(
    schedule: RollingSchedule,
    data: AlignedDataset,
    spec: RatioSpec,
    method: str,
    seed: int,
    config: BenchmarkConfig | None = None,
) -> BacktestReport:
    """Out-of-sample report of one benchmark method.

    Each window fits the method on its training months and produces
    weights for every test month. Simulation for the month at dataset
    index m uses seed ``seed + m``.
    """
    config = config or BenchmarkConfig()
    selector = BenchmarkSelector.parse(method)
    parts = []
    for window in schedule.windows:
        train_idx = _window_indices(data, schedule, window.train_slice)
        test_idx = _window_indices(data, schedule, window.test_slice)
        if selector.kind == "var" and test_idx[0] == 0:
            raise InsufficientData("The AR(1) benchmark needs a realized month before the test window.")
        weights = _benchmark_window_weights(
            selector, spec, data, train_idx, test_idx, derive_window_seed(seed, window.index), seed, config
        )
        parts.append(evaluate_weights(selector.token, spec, data.subset(test_idx), weights, window))
        logger.debug("Benchmark %s (%s) window %s done", selector.token, spec.token, window.index)
    return concatenate_reports(parts)


# ============================================================================
# Summaries and Tests
# ============================================================================


def _in_subperiod(months: np.ndarray, subperiod: tuple | None) -> np.ndarray:
    if subperiod is None:
        return np.ones(months.size, dtype=bool)
    start, end = (np.datetime64(m, "M") for m in subperiod)
    return (months >= start) & (months <= end)


def summarize(report: BacktestReport, subperiod: tuple | None = None) -> SummaryStats:
    """Summary statistics of monthly ratio values, optionally within a month range.

    Months with zero risk (NaN ratio) are left out; negative-risk months are
    included and counted by ``report.degenerate_count``.

    Raises
    ------
    InsufficientData
        With fewer than two usable months in range.
    """
    values = report.ratio_values[_in_subperiod(report.months, subperiod)]
    return summary_statistics(values[np.isfinite(values)])


@dataclass(frozen=True)
class DifferenceTest:
    t_stat: float
    p_value: float
    stars: str


def significance_stars(p_value: float) -> str:
    if p_value < 0.01:
        return "***"
    if p_value < 0.05:
        return "**"
    if p_value < 0.1:
        return "*"
    return ""


def mean_difference_test(a: np.ndarray, b: np.ndarray) -> DifferenceTest:
    """Paired two-sided t-test on a - b with 10%/5%/1% stars.

    Raises
    ------
    InsufficientData
        If lengths differ or fewer than three pairs are given.
    DegenerateInput
        If the differences are constant (to rounding) and nonzero.
    """
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1 or a.size < 3:
        raise InsufficientData("Paired test needs two equal-length series of at least three values.")
    diff = a - b
    if np.all(diff == 0):
        return DifferenceTest(t_stat=0.0, p_value=1.0, stars="")
    if np.ptp(diff) <= 1e-12 * max(1.0, float(np.abs(diff).max())):
        raise DegenerateInput("Paired differences have zero variance.")
    result = stats.ttest_rel(a, b)
    p_value = float(result.pvalue)
    return DifferenceTest(t_stat=float(result.statistic), p_value=p_value, stars=significance_stars(p_value))


# ============================================================================
# Rankings
# ============================================================================


def _canonical_position(token: str) -> int:
    return CANONICAL_RATIO_ORDER.index(token) if token in CANONICAL_RATIO_ORDER else len(CANONICAL_RATIO_ORDER)


def _ordered(reports: list[BacktestReport]) -> list[BacktestReport]:
    if not reports:
        raise InsufficientData("Ranking needs at least one report.")
    ordered = sorted(reports, key=lambda r: _canonical_position(r.spec.token))
    for report in ordered[1:]:
        if not np.array_equal(report.months, ordered[0].months):
            raise MisalignedDates("Reports must cover identical months.")
    return ordered


def best_ratio_timeline(reports: list[BacktestReport]) -> tuple[np.ndarray, list[str]]:
    """Per month, the ratio whose portfolio compounded the highest return.

    Ties go to the earliest ratio in canonical order.
    """
    ordered = _ordered(reports)
    returns = np.vstack([r.compounded_returns for r in ordered])
    winners = returns.argmax(axis=0)
    return ordered[0].months, [ordered[i].spec.token for i in winners]


@dataclass(frozen=True)
class RankingReport:
    """Ranks by mean monthly return (panel a) and by win frequency (panel b)."""

    mean_returns: dict[str, float]
    frequencies: dict[str, int]
    mean_ranks: dict[str, int]
    frequency_ranks: dict[str, int]
    correlation: float | None
    p_value: float | None

    def to_rows(self) -> list[dict]:
        return [
            {
                "ratio": token,
                "mean_return": self.mean_returns[token],
                "mean_rank": self.mean_ranks[token],
                "frequency": self.frequencies[token],
                "frequency_rank": self.frequency_ranks[token],
            }
            for token in self.mean_returns
        ]


def rank_from_scores(mean_returns: dict[str, float], frequencies: dict[str, int]) -> RankingReport:
    """Rank ratios by precomputed mean returns and win frequencies.

    Ties in one measure are broken by the other (higher first), then by
    canonical order. The Pearson correlation of the two rank vectors is
    reported with its two-sided p-value when three or more ratios are ranked.
    """
    tokens = sorted(mean_returns, key=_canonical_position)
    if set(tokens) != set(frequencies) or not tokens:
        raise InsufficientData("Mean returns and frequencies must cover the same ratios.")

    by_mean = sorted(tokens, key=lambda t: (-mean_returns[t], -frequencies[t], _canonical_position(t)))
    by_freq = sorted(tokens, key=lambda t: (-frequencies[t], -mean_returns[t], _canonical_position(t)))
    mean_ranks = {t: by_mean.index(t) + 1 for t in tokens}
    frequency_ranks = {t: by_freq.index(t) + 1 for t in tokens}

    correlation = p_value = None
    if len(tokens) >= 3:
        result = stats.pearsonr([mean_ranks[t] for t in tokens], [frequency_ranks[t] for t in tokens])
        correlation, p_value = float(result.statistic), float(result.pvalue)
    return RankingReport(
        mean_returns={t: mean_returns[t] for t in tokens},
        frequencies={t: frequencies[t] for t in tokens},
        mean_ranks=mean_ranks,
        frequency_ranks=frequency_ranks,
        correlation=correlation,
        p_value=p_value,
    )


def rank_ratios(reports: list[BacktestReport]) -> RankingReport:
    """Rank one report per ratio by mean compounded monthly return and by
    how often each ratio's portfolio was the month's best."""
    ordered = _ordered(reports)
    mean_returns = {r.spec.token: float(r.compounded_returns.mean()) for r in ordered}
    _, winners = best_ratio_timeline(ordered)
    frequencies = {r.spec.token: winners.count(r.spec.token) for r in ordered}
    return rank_from_scores(mean_returns, frequencies)


def wealth_path(report: BacktestReport, initial: float = 1.0) -> np.ndarray:
    """Cumulative wealth after every out-of-sample trading day."""
    daily = np.concatenate(report.daily_returns)
    return initial * np.exp(np.cumsum(np.log1p(daily)))


# ============================================================================
# ANN vs Best Benchmark
# ============================================================================


@dataclass(frozen=True)
class ComparisonRow:
    """ANN against the best benchmark (by mean ratio) over one period."""

    period: str
    ratio: str
    summaries: dict[str, SummaryStats]
    best_benchmark: str
    t_stat: float | None
    p_value: float | None
    stars: str

    def to_dict(self) -> dict:
        return {
            "period": self.period,
            "ratio": self.ratio,
            "summaries": {k: v.to_dict() for k, v in self.summaries.items()},
            "best_benchmark": self.best_benchmark,
            "t_stat": self.t_stat,
            "p_value": self.p_value,
            "stars": self.stars,
        }


def _compare_period(
    period: str, ann: BacktestReport, benchmarks: list[BacktestReport], mask: np.ndarray
) -> ComparisonRow:
    summaries = {"ann": summary_statistics(_finite(ann.ratio_values[mask]))}
    for report in benchmarks:
        summaries[report.method] = summary_statistics(_finite(report.ratio_values[mask]))
    best = max(benchmarks, key=lambda r: summaries[r.method].mean)

    a, b = ann.ratio_values[mask], best.ratio_values[mask]
    both = np.isfinite(a) & np.isfinite(b)
    try:
        test = mean_difference_test(a[both], b[both])
        t_stat, p_value, stars = test.t_stat, test.p_value, test.stars
    except (DegenerateInput, InsufficientData) as exc:
        logger.warning("No significance test for %s over %s: %s", ann.spec.token, period, exc)
        t_stat = p_value = None
        stars = ""
    return ComparisonRow(
        period=period,
        ratio=ann.spec.token,
        summaries=summaries,
        best_benchmark=best.method,
        t_stat=t_stat,
        p_value=p_value,
        stars=stars,
    )


def _finite(values: np.ndarray) -> np.ndarray:
    return values[np.isfinite(values)]


def compare_to_best_benchmark(ann: BacktestReport, benchmarks: list[BacktestReport]) -> list[ComparisonRow]:
    """Summaries of every method plus the ANN-vs-best paired test, overall and per window."""
    if not benchmarks:
        raise InsufficientData("Comparison needs at least one benchmark report.")
    for report in benchmarks:
        if not np.array_equal(report.months, ann.months):
            raise MisalignedDates(f"Benchmark {report.method} does not cover the ANN report's months.")

    rows = [_compare_period("overall", ann, benchmarks, np.ones(len(ann), dtype=bool))]
    for window in ann.windows:
        rows.append(_compare_period(window.label, ann, benchmarks, ann.window_index == window.index))
    return rows


__all__ = [
    "RollingWindow",
    "RollingSchedule",
    "build_schedule",
    "schedule_for",
    "BacktestReport",
    "evaluate_weights",
    "concatenate_reports",
    "train_windows",
    "run_ann",
    "run_benchmark",
    "summarize",
    "DifferenceTest",
    "significance_stars",
    "mean_difference_test",
    "best_ratio_timeline",
    "RankingReport",
    "rank_from_scores",
    "rank_ratios",
    "wealth_path",
    "ComparisonRow",
    "compare_to_best_benchmark",
]
