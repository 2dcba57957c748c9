"""
Variable importance for trained networks.

Connection weights read importance straight from the parameters; the
permutation and perturb methods measure how the model's out-of-sample mean
monthly Sharpe value reacts when one state variable is shuffled or shifted.
"""

import logging
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from ..utils.seeding import make_rng
from .config import DEFAULT_PERMUTATION_REPEATS, PERTURB_SHIFTS
from .data_io import AlignedDataset
from .errors import ConfigError, DegenerateInput, DegenerateRisk, InsufficientData
from .network import NetworkParams
from .ratios import RatioKind, RatioSpec
from .training import TrainedModel, evaluate_batch_months, predict_weights_batch


logger = logging.getLogger(__name__)

SCORE_SPEC = RatioSpec(RatioKind.SHARPE)

Shuffle = Callable[[np.random.Generator, int], np.ndarray]


@dataclass(frozen=True)
class ImportanceReport:
    """Relative importance per state variable with a descending ranking.

    Connection-weight values are signed and ranked by magnitude;
    permutation values are ranked as they are.
    """

    method: str
    variable_names: tuple[str, ...]
    importance: np.ndarray
    ranking: tuple[int, ...]
    standard_errors: np.ndarray | None = None

    def rank_of(self, variable: int) -> int:
        """1-based rank of a variable."""
        return self.ranking.index(variable) + 1

    def to_rows(self) -> list[dict]:
        return [
            {
                "method": self.method,
                "variable": name,
                "RI": float(self.importance[i]),
                "rank": self.rank_of(i),
            }
            for i, name in enumerate(self.variable_names)
        ]


def _ranking(keys: np.ndarray) -> tuple[int, ...]:
    # Stable sort keeps input order among ties
    return tuple(int(i) for i in np.argsort(-keys, kind="stable"))


def _names(count: int, names: tuple[str, ...] | None) -> tuple[str, ...]:
    return tuple(names) if names is not None else tuple(f"z{i + 1}" for i in range(count))


def connection_weights(
    params: NetworkParams, variable_names: tuple[str, ...] | None = None
) -> ImportanceReport:
    """RI_i = sum_h w_in[h, i] * w_out[0, h], against the first output node."""
    importance = params.w_out[0] @ params.w_in
    return ImportanceReport(
        method="connection_weights",
        variable_names=_names(importance.size, variable_names),
        importance=importance,
        ranking=_ranking(np.abs(importance)),
    )


def sharpe_score(model: TrainedModel, data: AlignedDataset, raw_states: np.ndarray | None = None) -> float:
    """Mean monthly Sharpe value of the model's portfolio over ``data``.

    ``raw_states`` replaces the dataset's raw state rows when given.
    """
    states = data.states if raw_states is None else raw_states
    weights, _ = predict_weights_batch(model, states)
    values, _ = evaluate_batch_months(SCORE_SPEC, data, weights)
    if not np.any(np.isfinite(values)):
        raise DegenerateRisk("Sharpe value is undefined in every out-of-sample month.")
    return float(np.nanmean(values))


def _default_shuffle(rng: np.random.Generator, size: int) -> np.ndarray:
    return rng.permutation(size)


def permutation_importance(
    model: TrainedModel,
    oos: AlignedDataset,
    k: int = DEFAULT_PERMUTATION_REPEATS,
    seed: int = 0,
    shuffle: Shuffle = _default_shuffle,
) -> ImportanceReport:
    """Score drop when one state column is shuffled across months.

    Repetition j of variable i draws its permutation from stream
    ``(seed, i, j)``. RI_i = s - mean_j s_{j,i}; standard errors are the
    stddev of the s_{j,i} over sqrt(k).

    Raises
    ------
    InsufficientData
        If ``oos`` is empty.
    """
    if len(oos) == 0:
        raise InsufficientData("Permutation importance needs out-of-sample months.")
    if k < 1:
        raise ConfigError("interpret.repeats must be at least 1")

    reference = sharpe_score(model, oos)
    n_vars = oos.n_variables
    importance = np.empty(n_vars)
    errors = np.zeros(n_vars)
    for i in range(n_vars):
        scores = np.empty(k)
        for j in range(k):
            order = shuffle(make_rng(seed, i, j), len(oos))
            shuffled = oos.states.copy()
            shuffled[:, i] = oos.states[order, i]
            scores[j] = sharpe_score(model, oos, shuffled)
        importance[i] = np.mean(reference - scores)
        if k > 1:
            errors[i] = scores.std(ddof=1) / np.sqrt(k)
    logger.debug("Permutation importance (k=%s): %s", k, np.round(importance, 6).tolist())
    return ImportanceReport(
        method="permutation",
        variable_names=oos.variable_names,
        importance=importance,
        ranking=_ranking(importance),
        standard_errors=errors,
    )


@dataclass(frozen=True)
class SensitivityCurve:
    """Percent change of the mean Sharpe value for each sigma shift of one variable."""

    variable: int
    variable_name: str
    shifts: tuple[int, ...]
    pct_change: np.ndarray
    scores: np.ndarray

    def to_rows(self) -> list[dict]:
        return [
            {"variable": self.variable_name, "shift_multiplier": shift, "pct_change": float(pct)}
            for shift, pct in zip(self.shifts, self.pct_change)
        ]


def perturb_sensitivity(
    model: TrainedModel,
    oos: AlignedDataset,
    variable: int,
    shifts: tuple[int, ...] = PERTURB_SHIFTS,
) -> SensitivityCurve:
    """Shift one raw state variable by multiples of its out-of-sample stddev.

    Shifted states pass through the model's training standardization. The
    percent change is 100 * (s_shift - s_0) / |s_0|.

    Raises
    ------
    DegenerateInput
        If the variable has zero spread or the unshifted score is zero.
    """
    if len(oos) == 0:
        raise InsufficientData("Perturb sensitivity needs out-of-sample months.")
    if not 0 <= variable < oos.n_variables:
        raise ConfigError(f"Variable index {variable} is out of range.")
    sigma = float(oos.states[:, variable].std())
    if sigma == 0:
        raise DegenerateInput(f"State variable {oos.variable_names[variable]} has zero spread.")

    base = sharpe_score(model, oos)
    if base == 0:
        raise DegenerateInput("Unshifted score is zero; percent changes are undefined.")

    scores = np.empty(len(shifts))
    pct = np.empty(len(shifts))
    for n, shift in enumerate(shifts):
        if shift == 0:
            scores[n], pct[n] = base, 0.0
            continue
        shifted = oos.states.copy()
        shifted[:, variable] += shift * sigma
        scores[n] = sharpe_score(model, oos, shifted)
        pct[n] = 100.0 * (scores[n] - base) / abs(base)
    return SensitivityCurve(
        variable=variable,
        variable_name=oos.variable_names[variable],
        shifts=tuple(shifts),
        pct_change=pct,
        scores=scores,
    )


def average_importance(reports: list[ImportanceReport]) -> ImportanceReport:
    """Average RI over windows, ranked the same way as the inputs."""
    if not reports:
        raise InsufficientData("Nothing to average.")
    methods = {r.method for r in reports}
    if len(methods) != 1 or len({r.variable_names for r in reports}) != 1:
        raise ConfigError("Only reports of one method over the same variables can be averaged.")
    importance = np.mean([r.importance for r in reports], axis=0)
    method = reports[0].method
    keys = np.abs(importance) if method == "connection_weights" else importance
    return ImportanceReport(
        method=method,
        variable_names=reports[0].variable_names,
        importance=importance,
        ranking=_ranking(keys),
    )


__all__ = [
    "SCORE_SPEC",
    "ImportanceReport",
    "connection_weights",
    "sharpe_score",
    "permutation_importance",
    "SensitivityCurve",
    "perturb_sensitivity",
    "average_importance",
]
