import numpy as np
import pytest

from slicesense import (
    AssignmentMatrix,
    SimConfig,
    TransitionMatrix,
    delay_g,
    delay_h,
    e2e_delay,
    gen_assignment,
    gen_transition_matrix,
    resource_utilization,
    simulate,
    validate_assignment,
)
from slicesense.errors import InfeasibleParametersError

from conftest import FIG1
from oracles import stationary_distribution


def make_config(**kwargs) -> SimConfig:
    defaults = dict(
        n_slices=3,
        n_resources=2,
        n_periods=10,
        weight_shared=0.3,
        noise_variance=0.1,
        seed=1,
    )
    defaults.update(kwargs)
    return SimConfig(**defaults)


class TestSimConfig:
    def test_probability_split_must_sum_to_one(self):
        with pytest.raises(ValueError):
            make_config(diag_prob=0.3)

    def test_levels_must_increase(self):
        with pytest.raises(ValueError):
            make_config(utilization_levels=(0.2, 0.2, 0.7, 0.9))
        with pytest.raises(ValueError):
            make_config(utilization_levels=(0.2, 0.5, 0.7, 1.1))

    def test_alpha_range(self):
        with pytest.raises(ValueError):
            make_config(exp_averaging=1.0)
        make_config(exp_averaging=0.7)


class TestTransitionMatrix:
    def test_row_sums_are_one(self):
        rng = np.random.default_rng(0)
        for seed in range(20):
            tm = gen_transition_matrix(np.random.default_rng(seed), make_config())
            assert np.abs(tm.probs.sum(axis=1) - 1.0).max() <= 1e-12

    def test_diagonal_is_diag_prob(self):
        tm = gen_transition_matrix(np.random.default_rng(3), make_config())
        assert np.allclose(np.diag(tm.probs), 0.25, atol=1e-12)

    def test_offdiagonals_nonincreasing_in_target(self):
        for seed in range(20):
            tm = gen_transition_matrix(np.random.default_rng(seed), make_config())
            for i in range(4):
                off = np.delete(tm.probs[i], i)
                assert np.all(np.diff(off) <= 1e-12)

    def test_validation_rejects_bad_rows(self):
        with pytest.raises(ValueError):
            TransitionMatrix([[0.25, 0.25, 0.25, 0.25], [0.25, 0.25, 0.3, 0.2],
                              [0.3, 0.3, 0.25, 0.15], [0.4, 0.3, 0.05, 0.25]])

    def test_custom_diag_prob(self):
        cfg = make_config(diag_prob=0.4, offdiag_row_sum=0.6)
        tm = gen_transition_matrix(np.random.default_rng(1), cfg)
        assert np.allclose(np.diag(tm.probs), 0.4)


class TestGenAssignment:
    @pytest.mark.parametrize("n_slices,n_resources", [(3, 2), (50, 15), (20, 6), (10, 3)])
    def test_generates_valid_matrices(self, n_slices, n_resources):
        rng = np.random.default_rng(42)
        for _ in range(5):
            a = gen_assignment(n_slices, n_resources, rng)
            assert a.entries.shape == (n_resources, n_slices)
            assert validate_assignment(a).ok

    def test_infeasible_parameters(self):
        rng = np.random.default_rng(0)
        with pytest.raises(InfeasibleParametersError):
            gen_assignment(2, 2, rng)  # only one distinct row of weight >= 2
        with pytest.raises(InfeasibleParametersError):
            gen_assignment(3, 5, rng)  # 2^3 - 3 - 1 = 4 < 5
        with pytest.raises(InfeasibleParametersError):
            gen_assignment(1, 1, rng)

    def test_density_adds_overlap(self):
        rng = np.random.default_rng(1)
        lean = np.mean(
            [gen_assignment(50, 15, rng, density=0.0).entries.sum() for _ in range(10)]
        )
        rng = np.random.default_rng(1)
        rich = np.mean(
            [gen_assignment(50, 15, rng, density=0.5).entries.sum() for _ in range(10)]
        )
        assert rich > lean


class TestResourceUtilization:
    def test_two_slice_average(self):
        a = AssignmentMatrix([[1, 1, 0], [1, 1, 1]])
        v = resource_utilization(a, np.array([0.2, 0.9, 0.5]))
        assert v[0] == pytest.approx((0.2 + 0.9) / 2)

    def test_constant_utilization(self):
        a = AssignmentMatrix([[1, 1, 0], [1, 1, 1]])
        v = resource_utilization(a, np.full(3, 0.42))
        assert np.allclose(v, 0.42)

    def test_fig1_hand_average(self):
        # independent arithmetic: plain python sums
        u = [0.2, 0.5, 0.9]
        expected = [sum(u) / 3.0, sum(u[:2]) / 2.0]
        v = resource_utilization(FIG1, np.array(u))
        assert v == pytest.approx(expected)
        assert expected[0] == pytest.approx(0.5333333333333333)
        assert expected[1] == pytest.approx(0.35)

    def test_trace_input(self):
        a = AssignmentMatrix([[1, 1, 0]])
        trace = np.array([[0.2, 0.4, 0.9], [0.6, 0.8, 0.1]])
        v = resource_utilization(a, trace)
        assert v.shape == (2, 1)
        assert v[:, 0] == pytest.approx([0.3, 0.7])


class TestDelayFunctions:
    def test_thresholds(self):
        assert delay_g(0.6) == 0.0
        assert delay_g(0.9) == pytest.approx(0.09)
        assert delay_h(0.5) == 0.0
        assert delay_h(0.65) == 0.0

    def test_custom_threshold(self):
        assert delay_g(0.9, threshold=0.8) == pytest.approx(0.01)


class TestE2EDelay:
    def test_idle_network_is_all_zero(self):
        cfg = make_config(noise_variance=0.0)
        d = e2e_delay(FIG1, np.array([0.5, 0.2, 0.6]), cfg, np.random.default_rng(0))
        assert np.all(d == 0.0)

    def test_own_weight_only(self):
        # w_S = 0: delay depends on own utilization only, not the assignment
        cfg = make_config(weight_shared=0.0, noise_variance=0.0)
        u = np.array([0.9, 0.7, 0.2])
        other = AssignmentMatrix([[1, 0, 1], [0, 1, 1]])
        d1 = e2e_delay(FIG1, u, cfg, np.random.default_rng(0))
        d2 = e2e_delay(other, u, cfg, np.random.default_rng(0))
        assert np.allclose(d1, d2)
        assert d1 == pytest.approx([(0.9 - 0.65) ** 2, (0.7 - 0.65) ** 2, 0.0])

    def test_fig1_hand_computed_delays(self):
        cfg = make_config(weight_shared=0.3, noise_variance=0.0)
        u = [0.9, 0.9, 0.2]
        # independent evaluation with plain python arithmetic
        v0 = sum(u) / 3.0
        v1 = sum(u[:2]) / 2.0
        g = [max(0.0, v0 - 0.6) ** 2, max(0.0, v1 - 0.6) ** 2]
        h = [max(0.0, x - 0.65) ** 2 for x in u]
        expected = [
            0.3 * (g[0] + g[1]) + 0.7 * h[0],
            0.3 * (g[0] + g[1]) + 0.7 * h[1],
            0.3 * g[0] + 0.7 * h[2],
        ]
        d = e2e_delay(FIG1, np.array(u), cfg, np.random.default_rng(0))
        assert d == pytest.approx(expected)
        assert expected[0] == pytest.approx(0.07208333333333333)

    def test_fixed_delay_floor(self):
        cfg = make_config(noise_variance=0.0, fixed_delay=0.001)
        d = e2e_delay(FIG1, np.array([0.2, 0.2, 0.2]), cfg, np.random.default_rng(0))
        assert np.allclose(d, 0.001)


class TestSimulate:
    def test_deterministic(self):
        cfg = make_config(n_slices=6, n_resources=2, n_periods=50)
        a, b = simulate(cfg), simulate(cfg)
        assert np.array_equal(a.measurements.values, b.measurements.values)
        assert np.array_equal(a.truth.entries, b.truth.entries)
        assert np.array_equal(a.utilization_trace, b.utilization_trace)

    def test_different_seeds_differ(self):
        a = simulate(make_config(n_slices=6, n_resources=2, n_periods=50, seed=1))
        b = simulate(make_config(n_slices=6, n_resources=2, n_periods=50, seed=2))
        assert not np.array_equal(a.measurements.values, b.measurements.values)

    def test_scenario1_shape(self):
        cfg = make_config(n_slices=50, n_resources=15, n_periods=1000)
        out = simulate(cfg)
        assert out.measurements.values.shape == (1000, 50)
        assert out.truth.entries.shape == (15, 50)
        assert validate_assignment(out.truth).ok

    def test_nonnegative_measurements(self):
        cfg = make_config(n_slices=10, n_resources=3, n_periods=300, noise_variance=0.5)
        assert np.all(simulate(cfg).measurements.values >= 0.0)

    def test_trace_matches_levels_without_averaging(self):
        cfg = make_config(n_slices=4, n_resources=1, n_periods=200)
        out = simulate(cfg)
        assert set(np.unique(out.utilization_trace)) <= {0.2, 0.5, 0.7, 0.9}

    def test_averaged_trace_stays_in_level_range(self):
        cfg = make_config(n_slices=4, n_resources=1, n_periods=500, exp_averaging=0.7)
        out = simulate(cfg)
        assert out.utilization_trace.min() >= 0.2 - 1e-12
        assert out.utilization_trace.max() <= 0.9 + 1e-12
        assert np.unique(out.utilization_trace).size > 4

    def test_pinned_truth_is_used(self):
        cfg = make_config(noise_variance=0.0, n_periods=20)
        out = simulate(cfg, truth=FIG1)
        assert np.array_equal(out.truth.entries, FIG1.entries)

    def test_pinned_truth_dimension_check(self):
        cfg = make_config(n_slices=5)
        with pytest.raises(ValueError):
            simulate(cfg, truth=FIG1)


class TestStatisticalProperties:
    def test_chain_marginals_match_stationary_oracle(self):
        # reconstruct the first slice's transition matrix by replaying the
        # documented draw order, then compare empirical state frequencies
        cfg = make_config(n_slices=2, n_resources=1, n_periods=50_000, noise_variance=0.0)
        rng = np.random.default_rng(cfg.seed)
        gen_assignment(cfg.n_slices, cfg.n_resources, rng, cfg.assignment_density)
        tm0 = gen_transition_matrix(rng, cfg)
        out = simulate(cfg)
        levels = np.asarray(cfg.utilization_levels)
        states = np.searchsorted(levels, out.utilization_trace[:, 0])
        freq = np.bincount(states, minlength=4) / states.shape[0]
        pi = stationary_distribution(tm0.probs)
        assert np.abs(freq - pi).max() < 0.02

    def test_noise_is_neutral_in_expectation(self):
        cfg = make_config(weight_shared=0.3, noise_variance=0.1, fixed_delay=0.0)
        u = np.array([0.9, 0.9, 0.2])
        rng = np.random.default_rng(77)
        base = e2e_delay(FIG1, u, cfg.with_overrides(noise_variance=0.0), rng)
        samples = np.array([e2e_delay(FIG1, u, cfg, rng) for _ in range(10_000)])
        rel_err = np.abs(samples.mean(axis=0)[:2] - base[:2]) / base[:2]
        assert rel_err.max() < 0.05

    def test_exponential_averaging_reduces_variance(self):
        raw = simulate(make_config(n_slices=3, n_resources=1, n_periods=10_000))
        smoothed = simulate(
            make_config(n_slices=3, n_resources=1, n_periods=10_000, exp_averaging=0.7)
        )
        # same seed: identical chain paths, so the traces are comparable
        assert np.all(
            smoothed.utilization_trace.var(axis=0) < raw.utilization_trace.var(axis=0)
        )
