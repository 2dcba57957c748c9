"""
Export utilities (report tables and figures)
============================================

Turns backtest reports, rankings and importance results into flat rows
for CSV output, and draws the report figures with matplotlib.
"""

import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from ..core.backtest import BacktestReport, ComparisonRow, RankingReport, wealth_path  # noqa: E402
from ..core.interpret import ImportanceReport, SensitivityCurve  # noqa: E402
from ..core.statistics import SummaryStats  # noqa: E402


logger = logging.getLogger(__name__)


# ============================================================================
# Plot-Ready Rows
# ============================================================================


def ratio_timeseries_rows(reports: list[BacktestReport]) -> list[dict]:
    """One row per (month, method, ratio) with the month's ratio value."""
    rows = []
    for report in reports:
        for month, value, flag in zip(report.months, report.ratio_values, report.degenerate_flags):
            rows.append(
                {
                    "month": str(month),
                    "method": report.method,
                    "ratio": report.spec.token,
                    "value": None if np.isnan(value) else float(value),
                    "degenerate": bool(flag),
                }
            )
    return rows


def weights_timeseries_rows(reports: list[BacktestReport], asset_names: tuple[str, ...]) -> list[dict]:
    """One row per (month, method, ratio) with one column per asset weight."""
    rows = []
    for report in reports:
        for month, weights in zip(report.months, report.weights):
            row = {"month": str(month), "method": report.method, "ratio": report.spec.token}
            row.update({name: float(w) for name, w in zip(asset_names, weights)})
            rows.append(row)
    return rows


def best_ratio_rows(months: np.ndarray, winners: list[str]) -> list[dict]:
    return [{"month": str(m), "best_ratio": w} for m, w in zip(months, winners)]


def summary_table_rows(comparisons: list[ComparisonRow]) -> list[dict]:
    """Mean/StdDev/Skewness/Kurtosis per method and period; stars mark the ANN row."""
    rows = []
    for comparison in comparisons:
        for method, summary in comparison.summaries.items():
            is_ann = method == "ann"
            rows.append(
                {
                    "period": comparison.period,
                    "ratio": comparison.ratio,
                    "method": method,
                    "mean": summary.mean,
                    "stddev": summary.stddev,
                    "skewness": summary.skewness,
                    "kurtosis": summary.kurtosis,
                    "best_benchmark": method == comparison.best_benchmark,
                    "t_stat": comparison.t_stat if is_ann else None,
                    "p_value": comparison.p_value if is_ann else None,
                    "stars": comparison.stars if is_ann else "",
                }
            )
    return rows


def descriptive_rows(assets: dict[str, SummaryStats], states: dict[str, SummaryStats]) -> list[dict]:
    """One row per asset (monthly compounded returns) and per raw state variable."""
    rows = [{"series": name, "kind": "asset", **stats.to_dict()} for name, stats in assets.items()]
    rows.extend({"series": name, "kind": "state", **stats.to_dict()} for name, stats in states.items())
    return rows


def ranking_rows(ranking: RankingReport) -> list[dict]:
    """Ranking table; mean returns are shown in percent."""
    rows = []
    for row in ranking.to_rows():
        row["mean_return_pct"] = 100.0 * row.pop("mean_return")
        rows.append(row)
    rows.append(
        {
            "ratio": "correlation",
            "mean_rank": None,
            "frequency": None,
            "frequency_rank": None,
            "mean_return_pct": ranking.correlation,
            "p_value": ranking.p_value,
        }
    )
    return rows


def importance_rows(report: ImportanceReport, window: str) -> list[dict]:
    rows = []
    for row in report.to_rows():
        row["window"] = window
        if report.standard_errors is not None:
            row["stderr"] = float(report.standard_errors[report.variable_names.index(row["variable"])])
        rows.append(row)
    return rows


def sensitivity_rows(curve: SensitivityCurve, window: str) -> list[dict]:
    return [{"window": window, **row} for row in curve.to_rows()]


# ============================================================================
# Figures
# ============================================================================


def _save(fig: plt.Figure, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    # Fixed metadata keeps re-runs byte-identical
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    logger.debug("Saved figure %s", path)
    return path


def _month_axis(months: np.ndarray) -> np.ndarray:
    return months.astype("datetime64[D]").astype(object)


def plot_ratio_timeseries(reports: list[BacktestReport], path: Path) -> Path:
    """Monthly ratio values of every method, one line each."""
    fig, ax = plt.subplots(figsize=(10, 4))
    for report in reports:
        ax.plot(_month_axis(report.months), report.ratio_values, label=report.method, linewidth=1)
    ax.set_ylabel(reports[0].spec.token if reports else "")
    ax.legend(loc="best", fontsize="small")
    return _save(fig, path)


def plot_weights(report: BacktestReport, asset_names: tuple[str, ...], path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(10, 4))
    ax.stackplot(_month_axis(report.months), report.weights.T, labels=asset_names)
    ax.set_ylim(0, max(1.0, float(report.weights.sum(axis=1).max())))
    ax.set_ylabel("weight")
    ax.legend(loc="upper right", fontsize="small")
    return _save(fig, path)


def plot_wealth(reports: list[BacktestReport], path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(10, 4))
    for report in reports:
        ax.plot(wealth_path(report), label=f"{report.method} ({report.spec.token})", linewidth=1)
    ax.set_xlabel("trading day")
    ax.set_ylabel("wealth")
    ax.legend(loc="best", fontsize="small")
    return _save(fig, path)


def plot_best_ratio(months: np.ndarray, winners: list[str], order: tuple[str, ...], path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(10, 3))
    levels = [order.index(w) for w in winners]
    ax.scatter(_month_axis(months), levels, s=8)
    ax.set_yticks(range(len(order)), order)
    return _save(fig, path)


def plot_sensitivity(curves: list[SensitivityCurve], path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    for curve in curves:
        ax.plot(curve.shifts, curve.pct_change, marker="o", label=curve.variable_name)
    ax.axhline(0.0, color="grey", linewidth=0.5)
    ax.set_xlabel("shift (stddev)")
    ax.set_ylabel("% change in mean Sharpe")
    ax.legend(loc="best", fontsize="small")
    return _save(fig, path)


__all__ = [
    "ratio_timeseries_rows",
    "weights_timeseries_rows",
    "best_ratio_rows",
    "descriptive_rows",
    "summary_table_rows",
    "ranking_rows",
    "importance_rows",
    "sensitivity_rows",
    "plot_ratio_timeseries",
    "plot_weights",
    "plot_wealth",
    "plot_best_ratio",
    "plot_sensitivity",
]
