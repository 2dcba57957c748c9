"""
ratio-allocator Workflows
=========================

High-level orchestration functions behind the command-line interface.

These functions combine data loading, walk-forward training, benchmark
backtests, interpretation and reporting into complete pipelines driven by
one ``RunConfig``. They are designed to be used both programmatically and
via the CLI.

Functions
---------
- load_dataset: Build the aligned (state, next-month returns) dataset
- train_workflow: Train one network per ratio and rolling window
- backtest_workflow: Out-of-sample reports for the network and benchmarks
- interpret_workflow: Connection weights, permutation importance, perturb
- report_workflow: Summary/ranking tables and figures from saved reports

Example Usage
-------------
>>> from ratio_allocator.core.run_config import load_run_config
>>> from ratio_allocator.core.workflows import backtest_workflow
>>> config = load_run_config("study.toml", ["ratios.kinds=sharpe,cvar"])
>>> reports = backtest_workflow(config)
>>> sorted(reports["sharpe"])
['ann', 'factor', 'parametric', 'static-20', 'static-60', 'static-80', 'var']
"""

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..utils import export
from ..utils.io import read_json, safe_name, should_process_output, write_json, write_rows_csv
from ..utils.seeding import derive_window_seed
from .backtest import (
    BacktestReport,
    RollingSchedule,
    RollingWindow,
    best_ratio_timeline,
    compare_to_best_benchmark,
    rank_ratios,
    run_ann,
    run_benchmark,
    schedule_for,
    train_windows,
)
from .config import (
    CANONICAL_RATIO_ORDER,
    FIGURES_SUBDIR,
    INTERPRET_SUBDIR,
    MODELS_SUBDIR,
    REPORTS_SUBDIR,
    get_output_dir,
)
from .data_io import (
    AlignedDataset,
    align_months,
    compute_state_variables,
    describe_panel,
    describe_states,
    generate_synthetic,
    load_macro_csv,
    load_returns_csv,
    load_states_csv,
    write_returns_csv,
    write_states_csv,
)
from .errors import ConfigError, InsufficientData
from .interpret import (
    ImportanceReport,
    SensitivityCurve,
    average_importance,
    connection_weights,
    permutation_importance,
    perturb_sensitivity,
)
from .network import NetworkShape
from .ratios import RatioSpec
from .run_config import RunConfig
from .training import TrainedModel

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StudyData:
    """Aligned dataset plus the schedule and network shape derived from it."""

    data: AlignedDataset
    schedule: RollingSchedule
    shape: NetworkShape


def _banner(title: str) -> None:
    logger.info("=" * 60)
    logger.info(title)
    logger.info("=" * 60)


def load_dataset(
    config: RunConfig, export_dir: Path | None = None, describe_path: Path | None = None
) -> AlignedDataset:
    """
    Load (or generate) returns and states and align them month by month.

    Parameters
    ----------
    config : RunConfig
        Run configuration; ``config.synthetic`` takes the place of files.
    export_dir : Path | None, optional
        When given with a synthetic config, the generated panel and states
        are written there as ``returns.csv`` and ``states.csv``.
    describe_path : Path | None, optional
        When given, per-asset and per-state summary statistics are written
        to this CSV.

    Returns
    -------
    AlignedDataset
        Raw (unstandardized) states paired with next-month daily returns.
    """
    if config.synthetic is not None:
        panel, states = generate_synthetic(config.synthetic, config.seed)
        logger.info("Generated synthetic data: %s months, seed %s", config.synthetic.months, config.seed)
        if export_dir is not None:
            write_returns_csv(panel, export_dir / "returns.csv")
            write_states_csv(states, export_dir / "states.csv")
            logger.info("Exported synthetic data to %s", export_dir)
    else:
        panel = load_returns_csv(config.data.returns)
        if config.data.states is not None:
            states = load_states_csv(config.data.states)
        else:
            states = compute_state_variables(load_macro_csv(config.data.macro))
        logger.info("Loaded %s daily rows for %s assets", panel.returns.shape[0], panel.n_assets)
    if describe_path is not None:
        write_rows_csv(export.descriptive_rows(describe_panel(panel), describe_states(states)), describe_path)
    return align_months(panel, states)


def prepare_study(
    config: RunConfig, export_dir: Path | None = None, describe_path: Path | None = None
) -> StudyData:
    data = load_dataset(config, export_dir, describe_path)
    schedule = schedule_for(data, config.schedule.train_len, config.schedule.test_len)
    shape = NetworkShape(
        inputs=data.n_variables,
        hidden=config.training.hidden_grid[0],
        n_assets=data.n_assets,
        output_mode=config.network.output_mode,
    )
    logger.info(
        "%s aligned months, %s rolling window(s), test months %s..%s",
        len(data),
        len(schedule.windows),
        schedule.windows[0].test_start,
        schedule.windows[-1].test_end,
    )
    return StudyData(data=data, schedule=schedule, shape=shape)


# ============================================================================
# Models
# ============================================================================


def _model_path(config: RunConfig, spec: RatioSpec, window_index: int) -> Path:
    return get_output_dir(config.output.dir, MODELS_SUBDIR) / spec.token / f"window_{window_index}.json"


def _save_models(config: RunConfig, study: StudyData, spec: RatioSpec, models: list[TrainedModel]) -> None:
    for window, model in zip(study.schedule.windows, models):
        path = _model_path(config, spec, window.index)
        write_json({"window": window.to_dict(), "model": model.to_dict()}, path)
        trace_rows = [{"iteration": i, "objective": v} for i, v in enumerate(model.objective_trace)]
        write_rows_csv(trace_rows, path.with_name(f"window_{window.index}_trace.csv"))


def _load_models(config: RunConfig, study: StudyData, spec: RatioSpec) -> list[TrainedModel] | None:
    """Saved models for every window, or None when any is missing or stale."""
    models = []
    for window in study.schedule.windows:
        path = _model_path(config, spec, window.index)
        if not path.exists():
            return None
        payload = read_json(path)
        model = TrainedModel.from_dict(payload["model"])
        expected = {**config.training.to_dict(), "seed": derive_window_seed(config.training.seed, window.index)}
        if (
            payload["window"] != window.to_dict()
            or model.spec != spec
            or model.config.to_dict() != expected
            or model.params.shape.output_mode is not study.shape.output_mode
        ):
            logger.info("Saved model %s does not match this configuration; retraining", path)
            return None
        models.append(model)
    return models


def _models_for(config: RunConfig, study: StudyData, spec: RatioSpec) -> list[TrainedModel]:
    models = _load_models(config, study, spec)
    if models is not None:
        logger.info("Using saved %s models", spec.token)
        return models
    models = train_windows(study.schedule, study.data, spec, study.shape, config.training)
    _save_models(config, study, spec, models)
    return models


def train_workflow(config: RunConfig, export_synthetic: bool = False) -> dict[str, list[TrainedModel]]:
    """
    Train one network per ratio and rolling window and save them.

    Writes ``models/<ratio>/window_<w>.json`` and the matching
    ``window_<w>_trace.csv`` objective traces under the output directory.

    Returns
    -------
    dict[str, list[TrainedModel]]
        Trained models per ratio token, in window order.
    """
    _banner("ratio-allocator Train Workflow")
    models_dir = get_output_dir(config.output.dir, MODELS_SUBDIR)
    study = prepare_study(config, models_dir if export_synthetic else None)

    results = {}
    for spec in config.ratios.specs:
        logger.info("Ratio: %s", spec.token)
        models = train_windows(study.schedule, study.data, spec, study.shape, config.training)
        _save_models(config, study, spec, models)
        unmet = sum(not m.converged for m in models)
        if unmet:
            logger.warning("%s of %s %s model(s) did not meet the budget constraint", unmet, len(models), spec.token)
        results[spec.token] = models

    write_json(config.to_dict(), models_dir / "run_config.json")
    logger.info("Models saved to %s", models_dir)
    return results


# ============================================================================
# Backtests
# ============================================================================


def _report_path(config: RunConfig, spec: RatioSpec, method: str) -> Path:
    return get_output_dir(config.output.dir, REPORTS_SUBDIR) / spec.token / f"{safe_name(method)}.json"


def backtest_workflow(config: RunConfig) -> dict[str, dict[str, BacktestReport]]:
    """
    Out-of-sample reports for the network and every selected benchmark.

    Per ratio, writes one report JSON per method plus
    ``ratio_timeseries.csv``, ``weights_timeseries.csv`` and
    ``summary_table.csv``; across ratios, ``best_ratio.csv``.

    Returns
    -------
    dict[str, dict[str, BacktestReport]]
        Reports per ratio token, keyed by file-safe method name.
    """
    _banner("ratio-allocator Backtest Workflow")
    reports_dir = get_output_dir(config.output.dir, REPORTS_SUBDIR)
    study = prepare_study(config, describe_path=reports_dir / "descriptive_stats.csv")

    results: dict[str, dict[str, BacktestReport]] = {}
    for spec in config.ratios.specs:
        logger.info("-" * 60)
        logger.info("Ratio: %s", spec.token)
        models = _models_for(config, study, spec)
        reports = {"ann": run_ann(study.schedule, study.data, spec, study.shape, config.training, models=models)}
        for selector in config.benchmarks.selectors:
            logger.info("Benchmark %s", selector)
            report = run_benchmark(study.schedule, study.data, spec, selector, config.seed, config.benchmarks)
            reports[safe_name(report.method)] = report

        for report in reports.values():
            write_json(report.to_dict(), _report_path(config, spec, report.method))
        _write_ratio_tables(reports_dir / spec.token, list(reports.values()), study.data.asset_names)
        results[spec.token] = reports

    ann_reports = [r["ann"] for r in results.values()]
    months, winners = best_ratio_timeline(ann_reports)
    write_rows_csv(export.best_ratio_rows(months, winners), reports_dir / "best_ratio.csv")
    logger.info("Reports saved to %s", reports_dir)
    return results


def _write_ratio_tables(directory: Path, reports: list[BacktestReport], asset_names: tuple[str, ...]) -> None:
    write_rows_csv(export.ratio_timeseries_rows(reports), directory / "ratio_timeseries.csv")
    write_rows_csv(export.weights_timeseries_rows(reports, asset_names), directory / "weights_timeseries.csv")
    ann = next(r for r in reports if r.method == "ann")
    benchmarks = [r for r in reports if r.method != "ann"]
    if benchmarks:
        comparisons = compare_to_best_benchmark(ann, benchmarks)
        write_rows_csv(export.summary_table_rows(comparisons), directory / "summary_table.csv")


# ============================================================================
# Interpretation
# ============================================================================

IMPORTANCE_COLUMNS = ["window", "method", "variable", "RI", "rank", "stderr"]


def interpret_workflow(
    config: RunConfig, methods: tuple[str, ...] | None = None, figures: bool = False
) -> dict[str, dict]:
    """
    Variable importance of the trained networks, per window and averaged.

    Parameters
    ----------
    config : RunConfig
        Run configuration (models are loaded, or trained when missing).
    methods : tuple[str, ...] | None, optional
        Subset of ``cw``, ``pi`` and ``perturb``; defaults to
        ``config.interpret.methods``.
    figures : bool, optional
        Also draw one sensitivity figure per ratio and window under
        ``figures/``.

    Returns
    -------
    dict[str, dict]
        Per ratio token: ``{"importance": [...], "sensitivity": [...]}``.
    """
    methods = tuple(methods or config.interpret.methods)
    unknown = [m for m in methods if m not in ("cw", "pi", "perturb")]
    if unknown:
        raise ConfigError(f"Unknown interpret method(s): {', '.join(unknown)}; expected cw, pi or perturb.")

    _banner("ratio-allocator Interpret Workflow")
    study = prepare_study(config)
    out_dir = get_output_dir(config.output.dir, INTERPRET_SUBDIR)

    results = {}
    for spec in config.ratios.specs:
        models = _models_for(config, study, spec)
        importance: dict[str, list[ImportanceReport]] = {"cw": [], "pi": []}
        curves: list[tuple[RollingWindow, SensitivityCurve]] = []
        for window, model in zip(study.schedule.windows, models):
            oos = study.data.subset(
                np.searchsorted(study.data.return_months, study.schedule.months[window.test_slice])
            )
            if "cw" in methods:
                importance["cw"].append(connection_weights(model.params, study.data.variable_names))
            if "pi" in methods:
                importance["pi"].append(
                    permutation_importance(model, oos, k=config.interpret.repeats, seed=config.seed)
                )
            if "perturb" in methods:
                for variable in range(study.data.n_variables):
                    curve = perturb_sensitivity(model, oos, variable, config.interpret.shifts)
                    curves.append((window, curve))

        rows = _importance_table(study, importance)
        ratio_dir = out_dir / spec.token
        if rows:
            write_rows_csv(rows, ratio_dir / "importance.csv", IMPORTANCE_COLUMNS)
        sensitivity = [row for window, curve in curves for row in export.sensitivity_rows(curve, window.label)]
        if sensitivity:
            write_rows_csv(sensitivity, ratio_dir / "sensitivity.csv")
        if figures and curves:
            _write_sensitivity_figures(config, spec, curves)
        results[spec.token] = {"importance": rows, "sensitivity": sensitivity}
        logger.info("Interpretation for %s saved to %s", spec.token, ratio_dir)
    return results


def _write_sensitivity_figures(
    config: RunConfig, spec: RatioSpec, curves: list[tuple[RollingWindow, SensitivityCurve]]
) -> None:
    figures_dir = get_output_dir(config.output.dir, FIGURES_SUBDIR)
    for index in sorted({window.index for window, _ in curves}):
        path = figures_dir / f"{spec.token}_sensitivity_window_{index}.png"
        if should_process_output(path, config.output.replace):
            export.plot_sensitivity([c for w, c in curves if w.index == index], path)


def _importance_table(study: StudyData, importance: dict[str, list[ImportanceReport]]) -> list[dict]:
    rows = []
    for reports in importance.values():
        for window, report in zip(study.schedule.windows, reports):
            rows.extend(export.importance_rows(report, window.label))
        if reports:
            rows.extend(export.importance_rows(average_importance(reports), "average"))
    return rows


# ============================================================================
# Reporting
# ============================================================================

RANKING_COLUMNS = ["ratio", "mean_return_pct", "mean_rank", "frequency", "frequency_rank", "p_value"]


def collect_reports(output_dir: Path | str | None) -> dict[str, dict[str, BacktestReport]]:
    """Read every saved report JSON, grouped by ratio token."""
    reports_dir = get_output_dir(output_dir, REPORTS_SUBDIR)
    if not reports_dir.exists():
        raise FileNotFoundError(f"No reports directory at {reports_dir}; run the backtest first.")
    results: dict[str, dict[str, BacktestReport]] = {}
    for path in sorted(reports_dir.glob("*/*.json")):
        report = BacktestReport.from_dict(read_json(path))
        results.setdefault(report.spec.token, {})[path.stem] = report
    if not results:
        raise InsufficientData(f"No report files found under {reports_dir}.")
    return results


def report_workflow(config: RunConfig, figures: bool = False) -> dict[str, Path]:
    """
    Summary table, ranking table and (optionally) figures from saved reports.

    Returns
    -------
    dict[str, Path]
        Written file paths by name.
    """
    _banner("ratio-allocator Report Workflow")
    grouped = collect_reports(config.output.dir)
    reports_dir = get_output_dir(config.output.dir, REPORTS_SUBDIR)
    written: dict[str, Path] = {}

    summary_rows = []
    for token in sorted(grouped, key=lambda t: CANONICAL_RATIO_ORDER.index(t)):
        by_method = grouped[token]
        if "ann" not in by_method:
            logger.warning("No ANN report for %s; skipping", token)
            continue
        benchmarks = [r for name, r in sorted(by_method.items()) if name != "ann"]
        if benchmarks:
            summary_rows.extend(export.summary_table_rows(compare_to_best_benchmark(by_method["ann"], benchmarks)))
    if summary_rows:
        written["summary_table"] = write_rows_csv(summary_rows, reports_dir / "summary_table.csv")

    ann_reports = [by_method["ann"] for by_method in grouped.values() if "ann" in by_method]
    if len(ann_reports) >= 2:
        ranking = rank_ratios(ann_reports)
        written["ranking"] = write_rows_csv(export.ranking_rows(ranking), reports_dir / "ranking.csv", RANKING_COLUMNS)
        logger.info("Rank correlation %s (p = %s)", ranking.correlation, ranking.p_value)

    if figures:
        written.update(_write_figures(config, grouped, ann_reports))
    logger.info("Report files: %s", ", ".join(str(p) for p in written.values()))
    return written


def _write_figures(
    config: RunConfig, grouped: dict[str, dict[str, BacktestReport]], ann_reports: list[BacktestReport]
) -> dict[str, Path]:
    figures_dir = get_output_dir(config.output.dir, FIGURES_SUBDIR)
    written = {}
    for token, by_method in grouped.items():
        path = figures_dir / f"{token}_ratio_timeseries.png"
        if should_process_output(path, config.output.replace):
            written[f"{token}_ratio_timeseries"] = export.plot_ratio_timeseries(list(by_method.values()), path)
        if "ann" in by_method:
            ann = by_method["ann"]
            assets = tuple(f"asset_{j + 1}" for j in range(ann.weights.shape[1]))
            path = figures_dir / f"{token}_weights.png"
            if should_process_output(path, config.output.replace):
                written[f"{token}_weights"] = export.plot_weights(ann, assets, path)
    if ann_reports:
        path = figures_dir / "wealth.png"
        if should_process_output(path, config.output.replace):
            written["wealth"] = export.plot_wealth(ann_reports, path)
        months, winners = best_ratio_timeline(ann_reports)
        order = tuple(t for t in CANONICAL_RATIO_ORDER if t in {r.spec.token for r in ann_reports})
        path = figures_dir / "best_ratio.png"
        if should_process_output(path, config.output.replace):
            written["best_ratio"] = export.plot_best_ratio(months, winners, order, path)
    return written


__all__ = [
    "StudyData",
    "load_dataset",
    "prepare_study",
    "train_workflow",
    "backtest_workflow",
    "interpret_workflow",
    "collect_reports",
    "report_workflow",
]
