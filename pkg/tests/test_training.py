import numpy as np
import pytest

from ratio_allocator.core.data_io import AlignedDataset, StandardizationStats, compute_standardization
from ratio_allocator.core.errors import ConfigError, DegenerateRisk, InsufficientData
from ratio_allocator.core.network import NetworkParams, NetworkShape, forward, init
from ratio_allocator.core.ratios import RatioKind, RatioSpec
from ratio_allocator.core.training import (
    MultiplierUpdate,
    TrainConfig,
    TrainedModel,
    cross_validate,
    constraint_residual,
    cross_validation_scores,
    fit_window,
    lagrangian_objective,
    learning_rate,
    objective_and_gradient,
    predict_weights,
    predict_weights_batch,
    train,
)
from ratio_allocator.utils.io import read_json, write_json


def standardized(data: AlignedDataset) -> tuple[AlignedDataset, StandardizationStats]:
    stats = compute_standardization(data.states)
    return data.with_states(stats.apply(data.states)), stats


def scaled_returns(data: AlignedDataset, factor: float) -> AlignedDataset:
    return AlignedDataset(
        states=data.states,
        month_returns=tuple(factor * r for r in data.month_returns),
        month_keys=data.month_keys,
        variable_names=data.variable_names,
        asset_names=data.asset_names,
    )


def hand_model(b_out: float, output_mode: str = "lagrangian") -> TrainedModel:
    shape = NetworkShape(inputs=2, hidden=1, output_mode=output_mode)
    params = NetworkParams(
        shape=shape,
        w_in=np.zeros((1, 2)),
        b_hidden=np.zeros(1),
        w_out=np.zeros((shape.outputs, 1)),
        b_out=np.full(shape.outputs, b_out),
    )
    return TrainedModel(
        params=params,
        spec=RatioSpec(RatioKind.SHARPE),
        stats=StandardizationStats(means=np.zeros(2), stddevs=np.ones(2)),
        objective_trace=(0.0,),
        converged=True,
        constraint_residual=0.0,
        stop_reason="max_iters",
        seed=0,
    )


class TestLearningRate:
    @pytest.mark.parametrize("iteration, expected", [(0, 0.1), (1, 0.05), (9, 0.01)])
    def test_harmonic_decay(self, iteration, expected):
        assert learning_rate(iteration, 0.1) == pytest.approx(expected)

    def test_negative_iteration(self):
        with pytest.raises(ConfigError):
            learning_rate(-1, 0.1)


class TestObjectiveGradient:
    @pytest.mark.parametrize("kind", list(RatioKind))
    @pytest.mark.parametrize("mode", ["lagrangian", "complement"])
    def test_matches_finite_differences(self, toy_data, kind, mode):
        spec = RatioSpec(kind, alpha=0.25, beta=0.8)
        shape = NetworkShape(inputs=3, hidden=2, output_mode=mode)
        base = init(shape, seed=6)
        params = NetworkParams.from_vector(shape, np.append(base.to_vector()[:-1], 0.3))

        _, grads = objective_and_gradient(params, toy_data, spec)
        theta = params.to_vector()
        h = 1e-6
        numeric = np.empty_like(theta)
        for i in range(theta.size):
            step = np.zeros_like(theta)
            step[i] = h
            up = lagrangian_objective(NetworkParams.from_vector(shape, theta + step), toy_data, spec)
            down = lagrangian_objective(NetworkParams.from_vector(shape, theta - step), toy_data, spec)
            numeric[i] = (up - down) / (2 * h)

        scale = np.abs(numeric).max()
        np.testing.assert_allclose(grads.to_vector(), numeric, rtol=1e-4, atol=1e-6 * scale)

    @pytest.mark.parametrize("mode", ["lagrangian", "complement"])
    def test_penalty_term_matches_finite_differences(self, toy_data, mode):
        spec = RatioSpec(RatioKind.SHARPE)
        shape = NetworkShape(inputs=3, hidden=2, output_mode=mode)
        params = NetworkParams.from_vector(shape, np.append(init(shape, seed=4).to_vector()[:-1], -0.2))

        _, grads = objective_and_gradient(params, toy_data, spec, penalty=40.0)
        theta = params.to_vector()
        h = 1e-6
        numeric = np.empty_like(theta)
        for i in range(theta.size):
            step = np.zeros_like(theta)
            step[i] = h
            up = lagrangian_objective(NetworkParams.from_vector(shape, theta + step), toy_data, spec, penalty=40.0)
            down = lagrangian_objective(NetworkParams.from_vector(shape, theta - step), toy_data, spec, penalty=40.0)
            numeric[i] = (up - down) / (2 * h)

        scale = np.abs(numeric).max()
        np.testing.assert_allclose(grads.to_vector(), numeric, rtol=1e-4, atol=1e-6 * scale)

    def test_penalty_value(self, toy_data):
        spec = RatioSpec(RatioKind.MAD)
        params = init(NetworkShape(inputs=3, hidden=2), seed=2)
        residual = forward(params, toy_data.states).sum(axis=1) - 1.0
        plain = lagrangian_objective(params, toy_data, spec)
        assert lagrangian_objective(params, toy_data, spec, penalty=3.0) == pytest.approx(
            plain - 1.5 * np.mean(residual**2)
        )

    def test_multiplier_gradient_is_mean_residual(self, toy_data):
        params = init(NetworkShape(inputs=3, hidden=2), seed=1)
        _, grads = objective_and_gradient(params, toy_data, RatioSpec(RatioKind.SHARPE))
        residual = forward(params, toy_data.states).sum(axis=1) - 1.0
        assert grads.mu == pytest.approx(residual.mean())


class TestTrain:
    def test_needs_twelve_months(self, toy_data, fast_train_config):
        data, stats = standardized(toy_data)
        with pytest.raises(InsufficientData):
            train(data, RatioSpec(RatioKind.SHARPE), NetworkShape(inputs=3, hidden=2), fast_train_config, stats)

    def test_shape_must_match_data(self, planted_data, fast_train_config):
        data, stats = standardized(planted_data)
        with pytest.raises(ConfigError):
            train(data, RatioSpec(RatioKind.SHARPE), NetworkShape(inputs=5, hidden=2), fast_train_config, stats)

    def test_zero_risk_month(self, fast_train_config):
        flat = AlignedDataset(
            states=np.arange(24.0).reshape(12, 2),
            month_returns=tuple(np.full((5, 2), 0.001) for _ in range(12)),
            month_keys=np.arange("2000-01", "2001-01", dtype="datetime64[M]"),
            variable_names=("a", "b"),
            asset_names=("x", "y"),
        )
        data, stats = standardized(flat)
        with pytest.raises(DegenerateRisk):
            train(data, RatioSpec(RatioKind.SHARPE), NetworkShape(inputs=2, hidden=2), fast_train_config, stats)

    def test_deterministic_given_seed(self, planted_data):
        data, stats = standardized(planted_data.subset(range(24)))
        config = TrainConfig(gamma0=5.0, max_iters=30, patience=30, hidden_grid=(2,), seed=9)
        shape = NetworkShape(inputs=3, hidden=2)
        a = train(data, RatioSpec(RatioKind.CVAR), shape, config, stats)
        b = train(data, RatioSpec(RatioKind.CVAR), shape, config, stats)
        np.testing.assert_array_equal(a.params.to_vector(), b.params.to_vector())
        assert a.objective_trace == b.objective_trace

    @pytest.mark.parametrize("mode", ["lagrangian", "complement"])
    def test_invariant_to_return_scale(self, planted_data, mode):
        data, stats = standardized(planted_data.subset(range(24)))
        config = TrainConfig(gamma0=5.0, max_iters=40, patience=40, hidden_grid=(2,), seed=2)
        shape = NetworkShape(inputs=3, hidden=2, output_mode=mode)
        spec = RatioSpec(RatioKind.SHARPE)
        base = train(data, spec, shape, config, stats)
        doubled = train(scaled_returns(data, 2.0), spec, shape, config, stats)
        np.testing.assert_allclose(doubled.objective_trace, base.objective_trace, rtol=1e-8, atol=1e-12)
        np.testing.assert_allclose(doubled.params.to_vector(), base.params.to_vector(), rtol=1e-7, atol=1e-10)

    def test_patience_stops_early(self, planted_data):
        data, stats = standardized(planted_data.subset(range(24)))
        config = TrainConfig(gamma0=1e-9, max_iters=500, patience=5, improvement_tol=1e-3, hidden_grid=(2,))
        model = train(data, RatioSpec(RatioKind.SHARPE), NetworkShape(inputs=3, hidden=2), config, stats)
        assert model.stop_reason == "patience"
        assert len(model.objective_trace) == 6

    def test_descent_option_moves_mu_the_other_way(self, planted_data):
        data, stats = standardized(planted_data.subset(range(24)))
        shape = NetworkShape(inputs=3, hidden=2)
        spec = RatioSpec(RatioKind.SHARPE)
        ascent = TrainConfig(gamma0=0.5, max_iters=1, patience=5, hidden_grid=(2,))
        descent = TrainConfig(gamma0=0.5, max_iters=1, patience=5, hidden_grid=(2,), multiplier_update=MultiplierUpdate.DESCENT)
        up = train(data, spec, shape, ascent, stats).params.mu
        down = train(data, spec, shape, descent, stats).params.mu
        assert up == pytest.approx(-down)
        assert up != 0.0

    def test_model_survives_json(self, planted_data, tmp_path):
        data, stats = standardized(planted_data.subset(range(24)))
        config = TrainConfig(gamma0=5.0, max_iters=10, patience=10, hidden_grid=(2,))
        model = train(data, RatioSpec(RatioKind.RACHEV, 0.3, 0.9), NetworkShape(inputs=3, hidden=2), config, stats)
        restored = TrainedModel.from_dict(read_json(write_json(model.to_dict(), tmp_path / "model.json")))
        z = planted_data.states[30]
        np.testing.assert_allclose(predict_weights(restored, z), predict_weights(model, z))
        assert restored.spec == model.spec
        assert restored.config == model.config

    @pytest.mark.slow
    def test_penalized_descent_meets_budget(self, planted_data):
        data, stats = standardized(planted_data.subset(range(48)))
        config = TrainConfig(
            gamma0=0.01,
            max_iters=2000,
            patience=2000,
            hidden_grid=(2,),
            seed=5,
            penalty=500.0,
            multiplier_update=MultiplierUpdate.DESCENT,
        )
        model = train(data, RatioSpec(RatioKind.SHARPE), NetworkShape(inputs=3, hidden=2), config, stats)
        assert model.converged
        assert model.constraint_residual <= 0.01
        assert constraint_residual(model.params, data) == pytest.approx(model.constraint_residual)

    def test_complement_sums_to_one_exactly(self, planted_data):
        data, stats = standardized(planted_data.subset(range(24)))
        config = TrainConfig(gamma0=5.0, max_iters=40, patience=40, hidden_grid=(2,), seed=7)
        shape = NetworkShape(inputs=3, hidden=2, output_mode="complement")
        model = train(data, RatioSpec(RatioKind.SHARPE), shape, config, stats)
        np.testing.assert_array_equal(forward(model.params, data.states).sum(axis=1), 1.0)
        assert model.constraint_residual == 0.0

    @pytest.mark.slow
    def test_learns_planted_signal(self, planted_data):
        config = TrainConfig(gamma0=20.0, max_iters=1500, patience=300, hidden_grid=(2,), seed=3)
        shape = NetworkShape(inputs=3, hidden=2, output_mode="complement")
        model = fit_window(planted_data.subset(range(60)), RatioSpec(RatioKind.SHARPE), shape, config)
        assert model.objective_trace[-1] > model.objective_trace[0]

        oos = planted_data.subset(range(60, 72))
        weights, _ = predict_weights_batch(model, oos.states)
        better_first = oos.states[:, 0] >= 0
        picks_better = np.where(better_first, weights[:, 0] > 0.5, weights[:, 0] < 0.5)
        assert picks_better.mean() >= 0.75


class TestModelSelection:
    def test_single_grid_point_skips_cv(self, toy_data):
        config = TrainConfig(hidden_grid=(7,), cv_folds=1)
        assert cross_validate(toy_data, RatioSpec(RatioKind.SHARPE), config, NetworkShape(inputs=3, hidden=1)) == 7

    def test_scores_cover_grid(self, planted_data):
        data, _ = standardized(planted_data.subset(range(36)))
        config = TrainConfig(gamma0=5.0, max_iters=20, patience=20, hidden_grid=(1, 3), cv_folds=3)
        scores = cross_validation_scores(data, RatioSpec(RatioKind.MAD), NetworkShape(inputs=3, hidden=1), config)
        assert set(scores) == {1, 3}
        assert all(np.isfinite(s) for s in scores.values())
        chosen = cross_validate(data, RatioSpec(RatioKind.MAD), config, NetworkShape(inputs=3, hidden=1))
        assert scores[chosen] == max(scores.values())

    def test_folds_need_twelve_training_months(self, planted_data):
        data, _ = standardized(planted_data.subset(range(20)))
        config = TrainConfig(max_iters=5, hidden_grid=(1, 2), cv_folds=2)
        with pytest.raises(InsufficientData):
            cross_validation_scores(data, RatioSpec(RatioKind.SHARPE), NetworkShape(inputs=3, hidden=1), config)

    def test_invalid_config(self):
        with pytest.raises(ConfigError):
            TrainConfig(gamma0=0.0)
        with pytest.raises(ConfigError):
            TrainConfig(hidden_grid=(2, 4), cv_folds=1)
        with pytest.raises(ConfigError):
            TrainConfig(penalty=-1.0)


class TestPrediction:
    def test_budget_rows_left_alone(self):
        weights, flags = predict_weights_batch(hand_model(0.0), np.zeros((3, 2)))
        np.testing.assert_allclose(weights, 0.5)
        assert not flags.any()

    def test_renormalizes_and_flags(self):
        weights, flags = predict_weights_batch(hand_model(2.0), np.zeros((2, 2)))
        np.testing.assert_allclose(weights, 0.5)
        assert flags.all()

    def test_complement_never_flagged(self):
        weights, flags = predict_weights_batch(hand_model(2.0, "complement"), np.zeros((2, 2)))
        np.testing.assert_allclose(weights.sum(axis=1), 1.0)
        assert not flags.any()
