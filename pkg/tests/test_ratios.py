import itertools
import math

import numpy as np
import pytest

from ratio_allocator.core.errors import ConfigError, DegenerateRisk, InsufficientData, NonFiniteInput
from ratio_allocator.core.ratios import (
    RatioKind,
    RatioSpec,
    empirical_var,
    evaluate,
    evaluate_batch,
    expected_tail_loss,
    gradient_batch,
    gradient_wrt_returns,
    upper_tail_mean,
)

ALL_KINDS = list(RatioKind)
SYMMETRIC = np.array([-0.02, -0.01, 0.01, 0.02])


def spec(kind: str, alpha: float = 0.5, beta: float = 0.99) -> RatioSpec:
    return RatioSpec.parse(kind, alpha, beta)


def brute_force(kind: RatioKind, r: list[float], alpha: float, beta: float) -> float:
    """Naive loops and sorting, independent of the vectorized implementation."""
    d = len(r)
    mean = sum(r) / d
    ordered = sorted(r)
    k = max(1, math.ceil(alpha * d - 1e-9))
    u = max(1, math.ceil((1 - beta) * d - 1e-9))
    etl = -sum(ordered[:k]) / k
    if kind is RatioKind.SHARPE:
        risk = math.sqrt(sum((x - mean) ** 2 for x in r) / d)
        return mean / risk
    if kind is RatioKind.MAD:
        return mean / (sum(abs(x - mean) for x in r) / d)
    if kind is RatioKind.MINIMAX:
        return mean / -min(r)
    if kind is RatioKind.GINI:
        pairs = sum(abs(a - b) for a, b in itertools.combinations(r, 2))
        return mean / (pairs / (d * (d - 1)))
    if kind is RatioKind.CVAR:
        return mean / etl
    return (sum(ordered[d - u:]) / u) / etl


class TestTailMeasures:
    def test_var_order_statistic(self):
        assert empirical_var(SYMMETRIC, 0.5) == pytest.approx(0.01)

    def test_var_constant_and_single(self):
        assert empirical_var(np.full(5, 0.003), 0.3) == pytest.approx(-0.003)
        assert empirical_var(np.array([0.03]), 0.99) == pytest.approx(-0.03)

    def test_expected_tail_loss(self):
        assert expected_tail_loss(SYMMETRIC, 0.5) == pytest.approx(0.015)
        assert expected_tail_loss(np.array([0.01, 0.02, 0.03, 0.04]), 0.5) == pytest.approx(-0.015)
        assert expected_tail_loss(np.full(4, 0.02), 0.5) == pytest.approx(-0.02)

    def test_upper_tail_mean(self):
        assert upper_tail_mean(SYMMETRIC, 0.99) == pytest.approx(0.02)
        assert upper_tail_mean(np.array([1, 2, 3, 4]) * 0.01, 0.5) == pytest.approx(0.035)
        assert upper_tail_mean(np.full(3, 0.07), 0.9) == pytest.approx(0.07)


class TestEvaluate:
    @pytest.mark.parametrize(
        "kind, r, expected",
        [
            ("sharpe", [0.01, 0.03], 2.0),
            ("sharpe", [-0.4, 0.4], 0.0),
            ("mad", [0.01, 0.03], 2.0),
            ("minimax", [-0.02, 0.05, 0.03], 1.0),
            ("gini", [0.0, 0.02], 1.0),
            ("cvar", SYMMETRIC, 0.0),
            ("rachev", SYMMETRIC, 0.02 / 0.015),
        ],
    )
    def test_documented_values(self, kind, r, expected):
        assert evaluate(spec(kind), np.array(r)).value == pytest.approx(expected, abs=1e-12)

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_constant_vector_is_degenerate(self, kind):
        with pytest.raises(DegenerateRisk):
            evaluate(RatioSpec(kind), np.full(10, 0.004))

    def test_negative_risk_is_flagged_not_raised(self):
        result = evaluate(spec("cvar"), np.array([0.01, 0.02, 0.03, 0.04]))
        assert result.degenerate_flag
        assert result.risk == pytest.approx(-0.015)
        assert result.value == pytest.approx(0.025 / -0.015)

    def test_input_errors(self):
        with pytest.raises(InsufficientData):
            evaluate(spec("sharpe"), np.array([0.01]))
        with pytest.raises(NonFiniteInput):
            evaluate(spec("sharpe"), np.array([0.01, np.nan]))

    def test_invalid_tail_parameters(self):
        with pytest.raises(ConfigError):
            RatioSpec.parse("cvar", alpha=1.0)
        with pytest.raises(ConfigError):
            RatioSpec.parse("omega")

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_matches_brute_force(self, kind, rng):
        s = RatioSpec(kind, alpha=0.3, beta=0.9)
        for _ in range(200):
            size = int(rng.integers(2, 60))
            r = rng.normal(0.001, 0.01, size)
            if kind is RatioKind.MINIMAX and r.min() >= 0:
                continue
            expected = brute_force(kind, r.tolist(), 0.3, 0.9)
            assert evaluate(s, r).value == pytest.approx(expected, rel=1e-10, abs=1e-12)

    @pytest.mark.slow
    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_matches_brute_force_up_to_500_days(self, kind, rng):
        s = RatioSpec(kind, alpha=0.3, beta=0.9)
        checked = 0
        while checked < 1000:
            size = int(rng.integers(2, 501))
            r = rng.normal(0.001, 0.01, size)
            if kind is RatioKind.MINIMAX and r.min() >= 0:
                continue
            expected = brute_force(kind, r.tolist(), 0.3, 0.9)
            assert evaluate(s, r).value == pytest.approx(expected, rel=1e-10, abs=1e-12)
            checked += 1

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_scale_invariance(self, kind, rng):
        r = rng.normal(0.0, 0.01, 30)
        s = RatioSpec(kind)
        assert evaluate(s, 3.7 * r).value == pytest.approx(evaluate(s, r).value, rel=1e-10)

    def test_sharpe_risk_translation_invariant(self, rng):
        r = rng.normal(0.0, 0.01, 25)
        assert evaluate(spec("sharpe"), r + 0.05).risk == pytest.approx(evaluate(spec("sharpe"), r).risk)

    def test_batch_marks_zero_risk_rows(self):
        rows = np.array([[0.01, 0.03], [0.02, 0.02]])
        values, degenerate = evaluate_batch(spec("sharpe"), rows)
        assert values[0] == pytest.approx(2.0)
        assert np.isnan(values[1])
        assert degenerate.tolist() == [False, True]


class TestGradient:
    @staticmethod
    def finite_difference(s: RatioSpec, r: np.ndarray, h: float = 1e-7) -> np.ndarray:
        grad = np.empty_like(r)
        for d in range(r.size):
            step = np.zeros_like(r)
            step[d] = h
            grad[d] = (evaluate(s, r + step).value - evaluate(s, r - step).value) / (2 * h)
        return grad

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_matches_finite_differences(self, kind, rng):
        s = RatioSpec(kind, alpha=0.25, beta=0.9)
        for _ in range(5):
            r = rng.normal(0.001, 0.01, 20)
            numeric = self.finite_difference(s, r)
            analytic = gradient_wrt_returns(s, r)
            np.testing.assert_allclose(analytic, numeric, rtol=1e-4, atol=1e-6 * np.abs(numeric).max())

    def test_minimax_extra_term_only_at_argmin(self):
        r = np.array([0.01, -0.03, 0.02, 0.005])
        grad = gradient_wrt_returns(spec("minimax"), r)
        reward_term = 1 / (r.size * 0.03)
        others = np.delete(grad, 1)
        np.testing.assert_allclose(others, reward_term)
        assert grad[1] != pytest.approx(reward_term)

    def test_orthogonal_perturbation_first_order_zero(self, rng):
        s = spec("sharpe")
        r = rng.normal(0.001, 0.01, 15)
        grad = gradient_wrt_returns(s, r)
        direction = rng.standard_normal(15)
        direction -= direction @ grad / (grad @ grad) * grad
        h = 1e-7
        change = evaluate(s, r + h * direction).value - evaluate(s, r).value
        assert abs(change) < 1e-9

    def test_batch_raises_on_zero_risk(self):
        with pytest.raises(DegenerateRisk):
            gradient_batch(spec("gini"), np.array([[0.01, 0.02], [0.01, 0.01]]))
