import numpy as np
import pytest

from ratio_allocator.core.benchmarks import (
    BenchmarkConfig,
    BenchmarkSelector,
    MomentForecast,
    MomentSeries,
    apply_parametric_policy,
    crra_utility,
    fit_ar1,
    fit_factor_benchmark,
    fit_moment_factor_model,
    fit_parametric_policy,
    fit_var_benchmark,
    forecast_ar1_moments,
    monthly_moments,
    moment_benchmark_weights,
    optimize_weights_grid,
    predict_ar1,
    predict_factor_moments,
    repair_covariance,
    simulate_returns,
    static_weights,
    unflatten_moments,
)
from ratio_allocator.core.data_io import AlignedDataset, compute_standardization
from ratio_allocator.core.errors import (
    ConfigError,
    DegenerateInput,
    DegenerateRisk,
    InsufficientData,
    NonFiniteInput,
    SingularDesign,
)
from ratio_allocator.core.ratios import RatioKind, RatioSpec, evaluate, evaluate_batch


class TestSelectors:
    def test_static_percent_forms(self):
        assert BenchmarkSelector.parse("static:60") == BenchmarkSelector.parse("static:0.6")
        assert BenchmarkSelector.parse("STATIC:60").token == "static:60"
        assert BenchmarkSelector.parse("static:0.2").token == "static:20"

    @pytest.mark.parametrize(
        "token, pct",
        [("static:1", 0.01), ("static:1.0", 1.0), ("static:0", 0.0), ("static:62.5", 0.625), ("static:100", 1.0)],
    )
    def test_decimal_point_marks_fractions(self, token, pct):
        assert BenchmarkSelector.parse(token).stock_pct == pytest.approx(pct)

    @pytest.mark.parametrize("pct", [0.01, 0.2, 0.625, 1.0])
    def test_token_reparses_to_same_mix(self, pct):
        selector = BenchmarkSelector("static", pct)
        assert BenchmarkSelector.parse(selector.token).stock_pct == pytest.approx(pct)

    def test_named(self):
        assert BenchmarkSelector.parse(" var ").kind == "var"

    @pytest.mark.parametrize("token", ["garch", "static:", "static:abc", "static:150"])
    def test_invalid(self, token):
        with pytest.raises(ConfigError):
            BenchmarkSelector.parse(token)

    def test_default_config_lists_every_method(self):
        tokens = BenchmarkConfig().selectors
        assert tokens[:3] == ("var", "factor", "parametric")
        assert "static:60" in tokens


class TestAR1:
    def test_exact_line(self):
        fit = fit_ar1(np.array([0.0, 1.0, 2.0, 3.0]))
        assert fit.intercept == pytest.approx(1.0)
        assert fit.slope == pytest.approx(1.0)
        assert predict_ar1(fit, 3.0) == pytest.approx(4.0)

    def test_geometric_decay(self):
        fit = fit_ar1(0.5 ** np.arange(8))
        assert fit.slope == pytest.approx(0.5)
        assert fit.intercept == pytest.approx(0.0, abs=1e-12)

    def test_flat_lag(self):
        fit = fit_ar1(np.array([2.0, 2.0, 2.0]))
        assert fit.slope == 0.0
        assert fit.intercept == pytest.approx(2.0)

    def test_columns_fit_independently(self):
        series = np.column_stack([np.arange(5.0), 0.5 ** np.arange(5)])
        fit = fit_ar1(series)
        np.testing.assert_allclose(fit.slope, [1.0, 0.5])

    def test_errors(self):
        with pytest.raises(InsufficientData):
            fit_ar1(np.array([1.0, 2.0]))
        with pytest.raises(NonFiniteInput):
            fit_ar1(np.array([1.0, np.inf, 2.0]))

    def test_var_forecast_from_training_window(self, planted_data):
        train = planted_data.subset(range(24))
        fit = fit_var_benchmark(train)
        last = monthly_moments(train).flatten()[-1]
        forecast = forecast_ar1_moments(fit, last, n_assets=2)
        assert forecast.mean.shape == (2,)
        assert np.linalg.eigvalsh(forecast.cov).min() >= -1e-12


class TestMoments:
    def test_population_covariance(self, toy_data):
        moments = monthly_moments(toy_data)
        block = toy_data.month_returns[2]
        np.testing.assert_allclose(moments.means[2], block.mean(axis=0))
        np.testing.assert_allclose(moments.covs[2], np.cov(block, rowvar=False, bias=True))
        assert moments.months[0] == np.datetime64("2000-02", "M")

    def test_flatten_layout(self):
        moments = MomentSeries(
            months=np.array(["2000-01"], dtype="datetime64[M]"),
            means=np.array([[0.1, 0.2]]),
            covs=np.array([[[4.0, 1.0], [1.0, 9.0]]]),
        )
        row = moments.flatten()[0]
        np.testing.assert_allclose(row, [0.1, 0.2, 4.0, 1.0, 9.0])
        mean, cov = unflatten_moments(row, 2)
        np.testing.assert_allclose(cov, moments.covs[0])
        np.testing.assert_allclose(mean, moments.means[0])

    def test_repair_clips_negative_eigenvalues(self):
        cov, repaired = repair_covariance(np.array([[1.0, 2.0], [2.0, 1.0]]))
        assert repaired
        assert np.linalg.eigvalsh(cov).min() >= -1e-12
        np.testing.assert_allclose(cov, [[1.5, 1.5], [1.5, 1.5]])

    def test_repair_leaves_psd_alone(self):
        original = np.array([[2.0, 0.5], [0.5, 1.0]])
        cov, repaired = repair_covariance(original)
        assert not repaired
        np.testing.assert_allclose(cov, original)


class TestFactorModel:
    @staticmethod
    def planted_moments(states: np.ndarray) -> MomentSeries:
        n = states.shape[0]
        means = np.column_stack([0.01 + 0.002 * states[:, 0], -0.003 * states[:, 1]])
        covs = np.tile(np.array([[4e-4, 1e-4], [1e-4, 2e-4]]), (n, 1, 1))
        covs[:, 0, 0] += 1e-5 * states[:, 0]
        months = np.datetime64("2000-02", "M") + np.arange(n)
        return MomentSeries(months=months, means=means, covs=covs)

    def test_recovers_linear_moments(self, rng):
        states = rng.standard_normal((20, 2))
        fit = fit_moment_factor_model(self.planted_moments(states), states)
        np.testing.assert_allclose(fit.intercepts, [0.01, 0.0, 4e-4, 1e-4, 2e-4], atol=1e-12)
        np.testing.assert_allclose(fit.slopes[:, 0], [0.002, 0.0, 1e-5, 0.0, 0.0], atol=1e-12)
        forecast = predict_factor_moments(fit, np.array([1.0, -1.0]))
        np.testing.assert_allclose(forecast.mean, [0.012, 0.003])
        assert not forecast.repaired

    def test_too_few_months(self, rng):
        states = rng.standard_normal((3, 2))
        with pytest.raises(InsufficientData):
            fit_moment_factor_model(self.planted_moments(states), states)

    def test_collinear_states(self, rng):
        column = rng.standard_normal(10)
        states = np.column_stack([column, 2 * column])
        with pytest.raises(SingularDesign):
            fit_moment_factor_model(self.planted_moments(states), states)

    def test_fit_on_training_window(self, planted_data):
        fit = fit_factor_benchmark(planted_data.subset(range(24)))
        assert fit.coefficients.shape == (4, 5)


class TestSimulation:
    def test_shape_and_determinism(self):
        mean, cov = np.array([0.02, 0.01]), np.array([[0.004, 0.001], [0.001, 0.002]])
        a = simulate_returns(mean, cov, days=21, seed=3, paths=10)
        assert a.shape == (210, 2)
        np.testing.assert_array_equal(a, simulate_returns(mean, cov, days=21, seed=3, paths=10))

    def test_moments_scale_with_days(self):
        mean, cov = np.array([0.021, -0.021]), np.array([[0.0042, 0.0], [0.0, 0.0021]])
        draws = simulate_returns(mean, cov, days=21, seed=1, paths=20000)
        np.testing.assert_allclose(draws.mean(axis=0), mean / 21, atol=3e-4)
        np.testing.assert_allclose(np.cov(draws, rowvar=False), cov / 21, rtol=0.05, atol=2e-6)

    def test_singular_covariance(self):
        draws = simulate_returns(np.zeros(2), np.array([[1.0, 1.0], [1.0, 1.0]]), days=4, seed=0, paths=3)
        np.testing.assert_allclose(draws[:, 0], draws[:, 1], atol=1e-7)

    def test_rejects_indefinite_covariance(self):
        with pytest.raises(DegenerateInput):
            simulate_returns(np.zeros(2), np.array([[1.0, 2.0], [2.0, 1.0]]), days=4, seed=0)


class TestGridOptimizer:
    def test_identical_assets_split_evenly(self, rng):
        column = rng.normal(0.001, 0.01, 50)
        weights = optimize_weights_grid(RatioSpec(RatioKind.SHARPE), np.column_stack([column, column]))
        np.testing.assert_allclose(weights, [0.5, 0.5])

    @pytest.mark.parametrize("kind", list(RatioKind))
    def test_best_grid_point(self, kind, rng):
        spec = RatioSpec(kind)
        simulated = rng.multivariate_normal([0.002, 0.0005], [[4e-4, -5e-5], [-5e-5, 1e-4]], size=100)
        weights = optimize_weights_grid(spec, simulated, grid_step=0.05)
        assert weights.sum() == pytest.approx(1.0)
        assert round(weights[0] / 0.05, 9) == round(weights[0] / 0.05)
        best = evaluate(spec, simulated @ weights).value
        for x in np.linspace(0, 1, 21):
            result = evaluate(spec, simulated @ np.array([x, 1 - x]))
            if not result.degenerate_flag:
                assert result.value <= best + 1e-12

    @staticmethod
    def finer_grid_optimum(spec: RatioSpec, simulated: np.ndarray) -> tuple[float, float]:
        """Best first-asset weight and value on a 0.0001 grid."""
        x = np.linspace(0.0, 1.0, 10001)
        values, degenerate = evaluate_batch(spec, np.column_stack([x, 1.0 - x]) @ simulated.T)
        values = np.where(degenerate, -np.inf, values)
        best = int(np.argmax(values))
        return float(x[best]), float(values[best])

    @staticmethod
    def positive_mean_panel(seed: int) -> np.ndarray:
        # both sample means stay positive, so the ratio is unimodal in the weight
        rng = np.random.default_rng(seed)
        return rng.multivariate_normal([0.005, 0.0025], [[1e-4, 1e-5], [1e-5, 2.5e-5]], size=105)

    @pytest.mark.slow
    @pytest.mark.parametrize(
        "kind", [RatioKind.SHARPE, RatioKind.MAD, RatioKind.MINIMAX, RatioKind.GINI, RatioKind.CVAR]
    )
    def test_within_a_thousandth_of_finer_grid(self, kind):
        spec = RatioSpec(kind)
        for seed in range(100):
            simulated = self.positive_mean_panel(seed)
            weights = optimize_weights_grid(spec, simulated)
            best_x, _ = self.finer_grid_optimum(spec, simulated)
            assert abs(weights[0] - best_x) <= 0.001 + 1e-9

    @pytest.mark.slow
    def test_rachev_value_close_to_finer_grid(self):
        # the Rachev ratio can have two local peaks, so compare values
        spec = RatioSpec(RatioKind.RACHEV)
        for seed in range(100):
            simulated = self.positive_mean_panel(seed)
            weights = optimize_weights_grid(spec, simulated)
            _, best_value = self.finer_grid_optimum(spec, simulated)
            assert evaluate(spec, simulated @ weights).value >= best_value - 1e-3

    def test_all_candidates_degenerate(self):
        simulated = np.array([[0.01, 0.02], [0.02, 0.03], [0.03, 0.01]])
        with pytest.raises(DegenerateRisk):
            optimize_weights_grid(RatioSpec(RatioKind.CVAR), simulated)

    def test_frontier_for_three_assets(self, rng):
        simulated = rng.multivariate_normal([0.002, 0.001, 0.0005], np.diag([4e-4, 1e-4, 5e-5]), size=200)
        weights = optimize_weights_grid(RatioSpec(RatioKind.SHARPE), simulated, frontier_points=15)
        assert weights.shape == (3,)
        assert np.all(weights >= 0)
        assert weights.sum() == pytest.approx(1.0)

    def test_moment_benchmark_weights(self):
        config = BenchmarkConfig(simulation_paths=5)
        forecast = MomentForecast(mean=np.array([0.02, 0.0]), cov=np.array([[4e-3, 0.0], [0.0, 1e-3]]))
        weights = moment_benchmark_weights(RatioSpec(RatioKind.SHARPE), forecast, config, seed=4)
        assert weights.sum() == pytest.approx(1.0)


class TestParametric:
    def test_crra_values(self):
        assert crra_utility(0.0, 5.0) == pytest.approx(-0.25)
        assert crra_utility(0.1, 5.0) == pytest.approx(-0.170753, abs=1e-6)

    def test_crra_errors(self):
        with pytest.raises(NonFiniteInput):
            crra_utility(-1.0, 5.0)
        with pytest.raises(ConfigError):
            crra_utility(0.0, 1.0)

    def test_dominant_asset_gets_everything(self, planted_data):
        data = planted_data.subset(range(24))
        dominated = AlignedDataset(
            states=data.states,
            month_returns=tuple(np.column_stack([r[:, 0] + 0.05, r[:, 0]]) for r in data.month_returns),
            month_keys=data.month_keys,
            variable_names=data.variable_names,
            asset_names=data.asset_names,
        )
        policy = fit_parametric_policy(dominated, gamma=5.0, seed=0, restarts=2, use_states=False)
        np.testing.assert_allclose(apply_parametric_policy(policy, np.zeros(3)), [1.0, 0.0], atol=1e-6)

    def test_slope_follows_planted_signal(self, planted_data):
        train = planted_data.subset(range(48))
        stats = compute_standardization(train.states)
        policy = fit_parametric_policy(train.with_states(stats.apply(train.states)), gamma=5.0, seed=1)
        assert policy.theta[0] > 0
        weights = apply_parametric_policy(policy, stats.apply(train.states))
        assert weights.shape == (48, 2)
        assert np.all((weights >= 0) & (weights <= 1))

    def test_static_weights(self):
        np.testing.assert_allclose(static_weights(0.6), [0.6, 0.4])
        with pytest.raises(ConfigError):
            static_weights(1.2)
