import numpy as np
import pytest
from numpy.testing import assert_allclose

from activedet.exceptions import (
    ConfigurationError,
    ContractViolationError,
    DegeneratePriorError,
)
from activedet.priors import InterferencePrior, map_penalty
from activedet.scenario import complex_normal
from activedet.solvers import (
    EstimateResult,
    SolverOptions,
    map_activity_step,
    map_interference_step,
    ml_activity_step,
    ml_interference_step,
    run_baseline_ml,
    run_map,
    run_ml,
)
from activedet.state import CovarianceState

from oracles import ccp_reference, random_problem, restricted_minimizer


def scalar_state(noise_var=1.0):
    """One pilot dimension, one device, unit pilot and gain."""
    return CovarianceState(np.array([[1.0 + 0.0j]]), np.array([1.0]), noise_var)


def default_prior(mean=0.3, variance=0.5, activity_prob=0.05):
    return InterferencePrior(mean, variance, 0.01, activity_prob, 80.0, 3.0)


def replace_entry(values, index, step):
    out = np.array(values, dtype=float, copy=True)
    out[index] += step
    return out


class TestMLActivityStep:
    def test_scalar_interior(self):
        # cov = 1, so s = 1 and q equals the sample variance; the stationary
        # point (q - s) / s^2 lands inside the box.
        state = scalar_state()
        assert ml_activity_step(state, np.array([[1.5 + 0j]]), 0) == 0.5

    def test_scalar_clips_at_one(self):
        state = scalar_state()
        assert ml_activity_step(state, np.array([[3.0 + 0j]]), 0) == 1.0

    def test_scalar_clips_at_zero(self):
        state = scalar_state()
        assert ml_activity_step(state, np.array([[0.25 + 0j]]), 0) == 0.0

    def test_clips_at_lower_box_edge_from_inside(self):
        rng = np.random.default_rng(211)
        pilots, pathloss, _, _, noise_var, _ = random_problem(rng, 4, 5)
        state = CovarianceState.from_estimates(
            pilots, pathloss, noise_var, np.full(5, 0.7), np.zeros(4)
        )
        # A noise-only sample covariance pushes every activity downward.
        d = ml_activity_step(state, np.eye(4) * (0.1 * noise_var), 1)
        assert d == -0.7

    def test_matches_restricted_minimizer(self):
        rng = np.random.default_rng(223)
        for _ in range(10):
            dim = int(rng.integers(2, 8))
            n_devices = int(rng.integers(2, 12))
            pilots, pathloss, activity, interference, noise_var, sample_cov = random_problem(
                rng, dim, n_devices
            )
            state = CovarianceState.from_estimates(
                pilots, pathloss, noise_var, activity, interference
            )
            i = int(rng.integers(n_devices))
            d = ml_activity_step(state, sample_cov, i)
            ref = restricted_minimizer(
                pilots, pathloss, activity, interference, noise_var, sample_cov,
                coordinate=i, kind="activity",
            )
            assert abs(d - ref) < 1e-6


class TestMLInterferenceStep:
    def test_scalar_unbounded_above(self):
        state = scalar_state()
        assert ml_interference_step(state, np.array([[3.0 + 0j]]), 0) == 2.0

    def test_scalar_floors_at_zero(self):
        state = scalar_state()
        assert ml_interference_step(state, np.array([[0.2 + 0j]]), 0) == 0.0

    def test_floors_at_current_value(self):
        rng = np.random.default_rng(227)
        pilots, pathloss, _, _, noise_var, _ = random_problem(rng, 4, 5)
        state = CovarianceState.from_estimates(
            pilots, pathloss, noise_var, np.zeros(5), np.full(4, 0.6)
        )
        d = ml_interference_step(state, np.eye(4) * (0.05 * noise_var), 2)
        assert d == -0.6

    def test_matches_restricted_minimizer(self):
        rng = np.random.default_rng(229)
        for _ in range(10):
            dim = int(rng.integers(2, 8))
            n_devices = int(rng.integers(2, 12))
            pilots, pathloss, activity, interference, noise_var, sample_cov = random_problem(
                rng, dim, n_devices
            )
            state = CovarianceState.from_estimates(
                pilots, pathloss, noise_var, activity, interference
            )
            ell = int(rng.integers(dim))
            d = ml_interference_step(state, sample_cov, ell)
            ref = restricted_minimizer(
                pilots, pathloss, activity, interference, noise_var, sample_cov,
                coordinate=ell, kind="interference",
            )
            assert abs(d - ref) < 1e-6


class TestMAPActivityStep:
    def test_even_odds_matches_ml_bitwise(self):
        rng = np.random.default_rng(233)
        pilots, pathloss, activity, interference, noise_var, sample_cov = random_problem(
            rng, 5, 7
        )
        state = CovarianceState.from_estimates(
            pilots, pathloss, noise_var, activity, interference
        )
        for i in range(7):
            assert map_activity_step(state, sample_cov, i, 0.5, 24) == ml_activity_step(
                state, sample_cov, i
            )

    def test_zero_step_at_fit_point_with_sparse_prior(self):
        # When the sample covariance equals the model covariance at a = 0,
        # the data term is stationary and the prior cannot push a below 0.
        rng = np.random.default_rng(239)
        pilots, pathloss, _, _, noise_var, _ = random_problem(rng, 5, 7)
        state = CovarianceState(pilots, pathloss, noise_var)
        cov = np.linalg.inv(state.cov_inv)
        cov = (cov + cov.conj().T) / 2
        for i in range(7):
            assert map_activity_step(state, cov, i, 0.05, 24) == 0.0

    def test_sparse_prior_never_exceeds_ml_step(self):
        rng = np.random.default_rng(241)
        for _ in range(20):
            pilots, pathloss, activity, interference, noise_var, sample_cov = random_problem(
                rng, 4, 6
            )
            state = CovarianceState.from_estimates(
                pilots, pathloss, noise_var, activity, interference
            )
            i = int(rng.integers(6))
            d_map = map_activity_step(state, sample_cov, i, 0.1, 16)
            d_ml = ml_activity_step(state, sample_cov, i)
            assert d_map <= d_ml + 1e-12

    def test_matches_restricted_minimizer(self):
        rng = np.random.default_rng(251)
        for _ in range(10):
            dim = int(rng.integers(2, 8))
            n_devices = int(rng.integers(2, 12))
            pilots, pathloss, activity, interference, noise_var, sample_cov = random_problem(
                rng, dim, n_devices
            )
            state = CovarianceState.from_estimates(
                pilots, pathloss, noise_var, activity, interference
            )
            i = int(rng.integers(n_devices))
            prob = float(rng.uniform(0.1, 0.9))
            n_antennas = int(rng.integers(1, 64))
            prior = default_prior(activity_prob=prob)
            d = map_activity_step(state, sample_cov, i, prob, n_antennas)

            def penalty(step):
                shifted = replace_entry(activity, i, step)
                return map_penalty(interference, shifted, prior, prob, n_antennas)

            ref = restricted_minimizer(
                pilots, pathloss, activity, interference, noise_var, sample_cov,
                coordinate=i, kind="activity", penalty=penalty,
            )
            assert abs(d - ref) < 1e-6


class TestMAPInterferenceStep:
    def test_wide_prior_recovers_ml_step(self):
        rng = np.random.default_rng(257)
        pilots, pathloss, activity, interference, noise_var, sample_cov = random_problem(
            rng, 5, 7
        )
        state = CovarianceState.from_estimates(
            pilots, pathloss, noise_var, activity, interference
        )
        prior = default_prior(variance=1e12)
        for ell in range(5):
            d_map = map_interference_step(state, sample_cov, ell, prior, 24)
            d_ml = ml_interference_step(state, sample_cov, ell)
            assert abs(d_map - d_ml) <= 1e-6 * max(1.0, abs(d_ml))

    def test_tight_prior_pins_estimate_to_mean(self):
        rng = np.random.default_rng(263)
        pilots, pathloss, activity, interference, noise_var, sample_cov = random_problem(
            rng, 5, 7
        )
        state = CovarianceState.from_estimates(
            pilots, pathloss, noise_var, activity, interference
        )
        prior = default_prior(mean=0.7, variance=1e-10)
        for ell in range(5):
            d = map_interference_step(state, sample_cov, ell, prior, 24)
            assert abs(interference[ell] + d - 0.7) < 1e-4

    def test_matches_restricted_minimizer(self):
        rng = np.random.default_rng(269)
        for _ in range(10):
            dim = int(rng.integers(2, 8))
            n_devices = int(rng.integers(2, 12))
            pilots, pathloss, activity, interference, noise_var, sample_cov = random_problem(
                rng, dim, n_devices
            )
            state = CovarianceState.from_estimates(
                pilots, pathloss, noise_var, activity, interference
            )
            ell = int(rng.integers(dim))
            prob = float(rng.uniform(0.1, 0.9))
            n_antennas = int(rng.integers(1, 64))
            prior = default_prior(
                mean=float(rng.uniform(0.0, 1.0)),
                variance=float(rng.uniform(0.1, 2.0)),
                activity_prob=prob,
            )
            d = map_interference_step(state, sample_cov, ell, prior, n_antennas)

            def penalty(step):
                shifted = replace_entry(interference, ell, step)
                return map_penalty(shifted, activity, prior, prob, n_antennas)

            ref = restricted_minimizer(
                pilots, pathloss, activity, interference, noise_var, sample_cov,
                coordinate=ell, kind="interference", penalty=penalty,
            )
            assert abs(d - ref) < 1e-6

    def test_matches_fine_grid_on_fixed_instance(self):
        rng = np.random.default_rng(271)
        pilots, pathloss, activity, interference, noise_var, sample_cov = random_problem(
            rng, 4, 6
        )
        state = CovarianceState.from_estimates(
            pilots, pathloss, noise_var, activity, interference
        )
        prior = default_prior(mean=0.4, variance=0.8)
        prob, n_antennas = 0.3, 24
        d = map_interference_step(state, sample_cov, 1, prior, n_antennas)

        def penalty(step):
            shifted = replace_entry(interference, 1, step)
            return map_penalty(shifted, activity, prior, prob, n_antennas)

        ref = restricted_minimizer(
            pilots, pathloss, activity, interference, noise_var, sample_cov,
            coordinate=1, kind="interference", penalty=penalty, n_grid=100001,
        )
        assert abs(d - ref) < 1e-7


class TestDescentBehavior:
    def test_ml_trace_is_monotone(self):
        rng = np.random.default_rng(277)
        opts = SolverOptions(monitor_objective=True)
        for _ in range(5):
            pilots, pathloss, _, _, noise_var, sample_cov = random_problem(
                rng, 6, 10, with_estimates=False
            )
            result = run_ml(sample_cov, pilots, pathloss, noise_var, options=opts)
            trace = result.objective_trace
            assert trace is not None and trace.ndim == 1
            slack = 1e-9 * np.maximum(1.0, np.abs(trace[:-1]))
            assert np.all(np.diff(trace) <= slack)

    def test_map_trace_is_monotone(self):
        rng = np.random.default_rng(281)
        opts = SolverOptions(monitor_objective=True)
        prior = default_prior()
        for _ in range(5):
            pilots, pathloss, _, _, noise_var, sample_cov = random_problem(
                rng, 6, 10, with_estimates=False
            )
            result = run_map(
                sample_cov, pilots, pathloss, noise_var, prior, 0.05, 24, options=opts
            )
            trace = result.objective_trace
            slack = 1e-9 * np.maximum(1.0, np.abs(trace[:-1]))
            assert np.all(np.diff(trace) <= slack)

    def test_final_objective_matches_trace_end(self):
        rng = np.random.default_rng(283)
        pilots, pathloss, _, _, noise_var, sample_cov = random_problem(
            rng, 5, 8, with_estimates=False
        )
        opts = SolverOptions(monitor_objective=True)
        result = run_ml(sample_cov, pilots, pathloss, noise_var, options=opts)
        assert result.final_objective == result.objective_trace[-1]

    def test_trace_absent_without_monitoring(self):
        rng = np.random.default_rng(293)
        pilots, pathloss, _, _, noise_var, sample_cov = random_problem(
            rng, 4, 6, with_estimates=False
        )
        result = run_ml(sample_cov, pilots, pathloss, noise_var)
        assert result.objective_trace is None


class TestRunML:
    def test_noise_only_covariance_gives_zero_estimates(self):
        rng = np.random.default_rng(307)
        pilots = complex_normal(rng, (6, 4), 1.0)
        noise_var = 0.25
        result = run_ml(np.eye(6) * noise_var, pilots, np.full(4, 0.5), noise_var)
        assert np.all(result.activity == 0.0)
        assert np.all(result.interference == 0.0)
        assert result.converged
        assert result.sweeps_used == 1
        assert_allclose(result.final_objective, 6 * np.log(noise_var) + 6, rtol=1e-14)

    def test_recovers_single_strong_device(self):
        rng = np.random.default_rng(42)
        dim, n_devices, n_antennas = 16, 8, 256
        pilots = complex_normal(rng, (dim, n_devices), 1.0)
        pathloss = np.ones(n_devices)
        noise_var = 0.1
        truth = np.zeros(n_devices)
        truth[3] = 1.0
        channels = complex_normal(rng, (n_devices, n_antennas), 1.0)
        noise = complex_normal(rng, (dim, n_antennas), noise_var)
        received = (pilots * np.sqrt(truth * pathloss)) @ channels + noise
        sample_cov = received @ received.conj().T / n_antennas
        sample_cov = (sample_cov + sample_cov.conj().T) / 2

        result = run_ml(sample_cov, pilots, pathloss, noise_var)
        assert result.converged
        assert result.activity[3] > 0.9
        mask = np.arange(n_devices) != 3
        assert np.all(result.activity[mask] < 0.1)

    def test_deterministic_across_calls(self):
        rng = np.random.default_rng(311)
        pilots, pathloss, _, _, noise_var, sample_cov = random_problem(
            rng, 6, 9, with_estimates=False
        )
        first = run_ml(sample_cov, pilots, pathloss, noise_var)
        second = run_ml(sample_cov, pilots, pathloss, noise_var)
        assert np.array_equal(first.activity, second.activity)
        assert np.array_equal(first.interference, second.interference)
        assert first.final_objective == second.final_objective

    def test_randomized_order_reaches_same_optimum(self):
        rng = np.random.default_rng(313)
        pilots, pathloss, _, _, noise_var, sample_cov = random_problem(
            rng, 6, 9, with_estimates=False
        )
        plain = run_ml(sample_cov, pilots, pathloss, noise_var)
        opts = SolverOptions(randomize_order=True)
        shuffled = run_ml(
            sample_cov, pilots, pathloss, noise_var, options=opts,
            rng=np.random.default_rng(99),
        )
        assert shuffled.converged
        assert abs(shuffled.final_objective - plain.final_objective) < 1e-5 * max(
            1.0, abs(plain.final_objective)
        )

    def test_sweep_budget_flags_nonconvergence(self):
        rng = np.random.default_rng(317)
        pilots, pathloss, _, _, noise_var, sample_cov = random_problem(
            rng, 6, 9, with_estimates=False
        )
        opts = SolverOptions(max_sweeps=1, coordinate_tol=1e-12, objective_tol=1e-14)
        result = run_ml(sample_cov, pilots, pathloss, noise_var, options=opts)
        assert result.sweeps_used == 1
        assert not result.converged

    def test_result_state_is_consistent(self):
        rng = np.random.default_rng(331)
        pilots, pathloss, _, _, noise_var, sample_cov = random_problem(
            rng, 6, 9, with_estimates=False
        )
        result = run_ml(sample_cov, pilots, pathloss, noise_var)
        assert isinstance(result, EstimateResult)
        result.state.check_consistency(1e-6)
        assert np.array_equal(result.state.activity, result.activity)


class TestRunBaseline:
    def test_interference_stays_zero(self):
        rng = np.random.default_rng(337)
        pilots, pathloss, _, _, noise_var, sample_cov = random_problem(
            rng, 6, 9, with_estimates=False
        )
        result = run_baseline_ml(sample_cov, pilots, pathloss, noise_var)
        assert not result.interference.any()
        assert result.converged

    def test_recovers_single_strong_device(self):
        rng = np.random.default_rng(42)
        dim, n_devices, n_antennas = 16, 8, 256
        pilots = complex_normal(rng, (dim, n_devices), 1.0)
        truth = np.zeros(n_devices)
        truth[3] = 1.0
        channels = complex_normal(rng, (n_devices, n_antennas), 1.0)
        noise = complex_normal(rng, (dim, n_antennas), 0.1)
        received = (pilots * np.sqrt(truth)) @ channels + noise
        sample_cov = received @ received.conj().T / n_antennas
        sample_cov = (sample_cov + sample_cov.conj().T) / 2
        result = run_baseline_ml(sample_cov, pilots, np.ones(n_devices), 0.1)
        assert result.activity[3] > 0.9
        assert not result.interference.any()


class TestRunMAP:
    def test_converges_and_reports_fields(self):
        rng = np.random.default_rng(347)
        pilots, pathloss, _, _, noise_var, sample_cov = random_problem(
            rng, 6, 9, with_estimates=False
        )
        result = run_map(
            sample_cov, pilots, pathloss, noise_var, default_prior(), 0.05, 24
        )
        assert result.converged
        assert result.activity.shape == (9,)
        assert result.interference.shape == (6,)
        assert np.all(result.activity >= 0.0) and np.all(result.activity <= 1.0)
        assert np.all(result.interference >= 0.0)

    def test_map_objective_includes_penalty(self):
        rng = np.random.default_rng(349)
        pilots, pathloss, _, _, noise_var, sample_cov = random_problem(
            rng, 6, 9, with_estimates=False
        )
        prior = default_prior()
        result = run_map(sample_cov, pilots, pathloss, noise_var, prior, 0.05, 24)
        expected = result.state.objective_ml(sample_cov) + map_penalty(
            result.interference, result.activity, prior, 0.05, 24
        )
        assert_allclose(result.final_objective, expected, rtol=1e-12)

    def test_tight_prior_dominates_interference(self):
        rng = np.random.default_rng(353)
        pilots, pathloss, _, _, noise_var, sample_cov = random_problem(
            rng, 6, 9, with_estimates=False
        )
        prior = default_prior(mean=0.9, variance=1e-9)
        result = run_map(sample_cov, pilots, pathloss, noise_var, prior, 0.05, 24)
        assert_allclose(result.interference, np.full(6, 0.9), atol=1e-3)


class TestAgainstConvexConcaveReference:
    def test_small_instances_reach_reference_optimum(self):
        # The reference is a multi-start convex-concave procedure with dense
        # linear algebra; coordinate descent run to a tight tolerance should
        # land on the same value.
        opts = SolverOptions(max_sweeps=200, coordinate_tol=1e-10, objective_tol=1e-13)
        for seed in (0, 1, 2, 6, 8, 9):
            rng = np.random.default_rng(seed)
            pilots, pathloss, _, _, noise_var, sample_cov = random_problem(
                rng, 4, 3, with_estimates=False
            )
            result = run_ml(sample_cov, pilots, pathloss, noise_var, options=opts)
            starts = [(np.zeros(3), np.zeros(4)), (np.full(3, 0.5), np.full(4, 0.5))]
            for _ in range(3):
                starts.append((rng.uniform(0, 1, 3), rng.uniform(0, 1, 4)))
            reference = ccp_reference(pilots, pathloss, noise_var, sample_cov, starts)
            assert abs(result.final_objective - reference) < 1e-9 * max(
                1.0, abs(reference)
            )


class TestValidation:
    def test_non_hermitian_sample_cov_raises(self):
        rng = np.random.default_rng(359)
        pilots, pathloss, _, _, noise_var, sample_cov = random_problem(
            rng, 4, 6, with_estimates=False
        )
        bad = sample_cov.copy()
        bad[0, 1] += 1e-3
        with pytest.raises(ContractViolationError):
            run_ml(bad, pilots, pathloss, noise_var)

    def test_sample_cov_shape_mismatch_raises(self):
        rng = np.random.default_rng(367)
        pilots, pathloss, _, _, noise_var, _ = random_problem(
            rng, 4, 6, with_estimates=False
        )
        with pytest.raises(ContractViolationError):
            run_ml(np.eye(5, dtype=complex), pilots, pathloss, noise_var)

    def test_step_index_out_of_range_raises(self):
        rng = np.random.default_rng(373)
        pilots, pathloss, _, _, noise_var, sample_cov = random_problem(
            rng, 4, 6, with_estimates=False
        )
        state = CovarianceState(pilots, pathloss, noise_var)
        with pytest.raises(ContractViolationError):
            ml_activity_step(state, sample_cov, 6)
        with pytest.raises(ContractViolationError):
            ml_interference_step(state, sample_cov, 4)

    def test_bad_activity_prob_raises(self):
        rng = np.random.default_rng(379)
        pilots, pathloss, _, _, noise_var, sample_cov = random_problem(
            rng, 4, 6, with_estimates=False
        )
        state = CovarianceState(pilots, pathloss, noise_var)
        for prob in (0.0, 1.0, -0.1, 1.5):
            with pytest.raises(ContractViolationError):
                map_activity_step(state, sample_cov, 0, prob, 24)

    def test_degenerate_prior_variance_raises(self):
        rng = np.random.default_rng(383)
        pilots, pathloss, _, _, noise_var, sample_cov = random_problem(
            rng, 4, 6, with_estimates=False
        )
        state = CovarianceState(pilots, pathloss, noise_var)
        prior = InterferencePrior(0.3, 0.0, 0.01, 0.05, 80.0, 3.0)
        with pytest.raises(DegeneratePriorError):
            map_interference_step(state, sample_cov, 0, prior, 24)

    def test_nonpositive_antenna_count_raises(self):
        rng = np.random.default_rng(389)
        pilots, pathloss, _, _, noise_var, sample_cov = random_problem(
            rng, 4, 6, with_estimates=False
        )
        state = CovarianceState(pilots, pathloss, noise_var)
        with pytest.raises(ContractViolationError):
            map_activity_step(state, sample_cov, 0, 0.05, 0)

    def test_bad_solver_options_raise(self):
        with pytest.raises(ConfigurationError):
            SolverOptions(max_sweeps=0)
        with pytest.raises(ConfigurationError):
            SolverOptions(coordinate_tol=0.0)
        with pytest.raises(ConfigurationError):
            SolverOptions(objective_tol=-1e-9)

    def test_randomize_order_requires_rng(self):
        rng = np.random.default_rng(397)
        pilots, pathloss, _, _, noise_var, sample_cov = random_problem(
            rng, 4, 6, with_estimates=False
        )
        opts = SolverOptions(randomize_order=True)
        with pytest.raises(ContractViolationError):
            run_ml(sample_cov, pilots, pathloss, noise_var, options=opts)
