import numpy as np
import pytest

from ratio_allocator.core.data_io import (
    AlignedDataset,
    StandardizationStats,
    SyntheticConfig,
    align_months,
    generate_synthetic,
)
from ratio_allocator.core.errors import ConfigError, DegenerateInput
from ratio_allocator.core.interpret import (
    average_importance,
    connection_weights,
    permutation_importance,
    perturb_sensitivity,
    sharpe_score,
)
from ratio_allocator.core.network import NetworkParams, NetworkShape
from ratio_allocator.core.ratios import RatioKind, RatioSpec
from ratio_allocator.core.training import TrainConfig, TrainedModel, fit_window


def signal_model(n_variables: int = 3, strength: float = 10.0) -> TrainedModel:
    """Complement-mode network that puts nearly everything in asset 1 when z_1 > 0."""
    shape = NetworkShape(inputs=n_variables, hidden=1, output_mode="complement")
    w_in = np.zeros((1, n_variables))
    w_in[0, 0] = strength
    params = NetworkParams(
        shape=shape,
        w_in=w_in,
        b_hidden=np.zeros(1),
        w_out=np.array([[2 * strength]]),
        b_out=np.array([-strength]),
    )
    return TrainedModel(
        params=params,
        spec=RatioSpec(RatioKind.SHARPE),
        stats=StandardizationStats(means=np.zeros(n_variables), stddevs=np.ones(n_variables)),
        objective_trace=(0.0,),
        converged=True,
        constraint_residual=0.0,
        stop_reason="max_iters",
        seed=0,
    )


def cw_params(w_in: np.ndarray, w_out: np.ndarray) -> NetworkParams:
    hidden, inputs = w_in.shape
    return NetworkParams(
        shape=NetworkShape(inputs=inputs, hidden=hidden, output_mode="complement"),
        w_in=w_in,
        b_hidden=np.zeros(hidden),
        w_out=w_out,
        b_out=np.zeros(1),
    )


class TestConnectionWeights:
    def test_hand_computed(self):
        params = cw_params(np.array([[1.0, 0.3], [-2.0, 0.1]]), np.array([[0.5, 0.5]]))
        report = connection_weights(params, ("dy", "trend"))
        np.testing.assert_allclose(report.importance, [-0.5, 0.2])
        assert report.ranking == (0, 1)
        assert report.to_rows()[0] == {"method": "connection_weights", "variable": "dy", "RI": -0.5, "rank": 1}

    def test_linear_in_output_weights(self):
        w_in = np.array([[1.0, -0.4, 0.2], [0.3, 0.9, -1.1]])
        base = connection_weights(cw_params(w_in, np.array([[0.5, -0.25]])))
        scaled = connection_weights(cw_params(w_in, np.array([[1.5, -0.75]])))
        np.testing.assert_allclose(scaled.importance, 3 * base.importance)
        assert scaled.ranking == base.ranking

    def test_ties_keep_input_order(self):
        report = connection_weights(cw_params(np.zeros((2, 3)), np.ones((1, 2))))
        assert report.ranking == (0, 1, 2)
        assert report.variable_names == ("z1", "z2", "z3")


class TestPermutationImportance:
    def test_signal_ranks_first(self, planted_data):
        report = permutation_importance(signal_model(), planted_data, k=20, seed=3)
        assert report.ranking[0] == 0
        assert report.importance[0] > 0
        np.testing.assert_allclose(report.importance[1:], 0.0, atol=1e-14)
        assert report.standard_errors[0] > 0

    def test_deterministic(self, planted_data):
        oos = planted_data.subset(range(30))
        a = permutation_importance(signal_model(), oos, k=5, seed=11)
        b = permutation_importance(signal_model(), oos, k=5, seed=11)
        np.testing.assert_array_equal(a.importance, b.importance)

    def test_identity_shuffle_gives_zero(self, planted_data):
        report = permutation_importance(
            signal_model(), planted_data, k=3, shuffle=lambda rng, n: np.arange(n)
        )
        np.testing.assert_allclose(report.importance, 0.0, atol=1e-14)

    def test_single_repeat_has_zero_stderr(self, planted_data):
        report = permutation_importance(signal_model(), planted_data.subset(range(12)), k=1)
        np.testing.assert_array_equal(report.standard_errors, 0.0)

    def test_invalid_repeats(self, planted_data):
        with pytest.raises(ConfigError):
            permutation_importance(signal_model(), planted_data, k=0)

    def test_unused_inputs_score_exactly_zero(self, planted_data):
        report = permutation_importance(signal_model(), planted_data, k=7, seed=2)
        np.testing.assert_array_equal(report.importance[1:], 0.0)
        cw = connection_weights(signal_model().params, planted_data.variable_names)
        np.testing.assert_array_equal(cw.importance[1:], 0.0)
        for variable in (1, 2):
            curve = perturb_sensitivity(signal_model(), planted_data, variable=variable)
            np.testing.assert_array_equal(curve.pct_change, 0.0)


class TestPerturb:
    def test_flat_for_unused_variable(self, planted_data):
        curve = perturb_sensitivity(signal_model(), planted_data, variable=2)
        assert curve.shifts == (-3, -2, -1, 0, 1, 2, 3)
        np.testing.assert_array_equal(curve.pct_change, 0.0)
        assert curve.variable_name == "noise_2"

    def test_signal_shift_hurts(self, planted_data):
        curve = perturb_sensitivity(signal_model(), planted_data, variable=0, shifts=(-3, 0, 3))
        assert curve.pct_change[1] == 0.0
        assert curve.scores[1] == pytest.approx(sharpe_score(signal_model(), planted_data))
        assert curve.pct_change[0] < 0 and curve.pct_change[2] < 0
        assert len(curve.to_rows()) == 3

    def test_zero_spread_variable(self, planted_data):
        states = planted_data.states.copy()
        states[:, 1] = 0.5
        flat = AlignedDataset(
            states, planted_data.month_returns, planted_data.month_keys, planted_data.variable_names, planted_data.asset_names
        )
        with pytest.raises(DegenerateInput):
            perturb_sensitivity(signal_model(), flat, variable=1)

    def test_variable_out_of_range(self, planted_data):
        with pytest.raises(ConfigError):
            perturb_sensitivity(signal_model(), planted_data, variable=3)


class TestAverage:
    def test_mean_over_windows(self):
        a = connection_weights(cw_params(np.array([[1.0, -3.0]]), np.array([[1.0]])))
        b = connection_weights(cw_params(np.array([[3.0, -1.0]]), np.array([[1.0]])))
        avg = average_importance([a, b])
        np.testing.assert_allclose(avg.importance, [2.0, -2.0])
        assert avg.ranking == (0, 1)

    def test_methods_must_match(self, planted_data):
        cw = connection_weights(signal_model().params, planted_data.variable_names)
        pi = permutation_importance(signal_model(), planted_data.subset(range(12)), k=1)
        with pytest.raises(ConfigError):
            average_importance([cw, pi])


SWEEP = SyntheticConfig(
    months=96,
    days_per_month=10,
    n_noise=2,
    mean_gap=0.02,
    volatility=0.01,
    signal_floor=1.0,
)


@pytest.mark.slow
def test_trained_networks_rank_signal_first():
    # twenty trained networks; 19/20 and 18/20 mirror the 95% and 90% rates
    config = TrainConfig(gamma0=20.0, max_iters=600, patience=150, hidden_grid=(2,))
    shape = NetworkShape(inputs=3, hidden=2, output_mode="complement")
    pi_first = cw_first = 0
    for seed in range(20):
        panel, states = generate_synthetic(SWEEP, seed=seed)
        data = align_months(panel, states)
        model = fit_window(data.subset(range(72)), RatioSpec(RatioKind.SHARPE), shape, config, seed=seed)
        pi = permutation_importance(model, data.subset(range(72, 96)), k=5, seed=seed)
        cw = connection_weights(model.params, data.variable_names)
        pi_first += pi.ranking[0] == 0
        cw_first += cw.ranking[0] == 0
    assert pi_first >= 19
    assert cw_first >= 18
