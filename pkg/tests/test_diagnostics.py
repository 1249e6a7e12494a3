import numpy as np
import pytest

import mirrorflow.diagnostics as diagnostics
from mirrorflow.dynamics import (
    ConstantSchedule,
    IntegratorConfig,
    OptimizedSchedule,
    PowerLawSchedule,
    Trajectory,
    integrate_md,
    integrate_smd,
    simulate_paths,
)
from mirrorflow.errors import InfeasiblePointError
from mirrorflow.geometry import Box, Simplex
from mirrorflow.mirror import Regularizer
from mirrorflow.noise import ConstantNoise
from mirrorflow.problems import QuadraticObjective


@pytest.fixture
def square_wave():
    # inside the unit ball around the origin for t < 5, outside afterwards
    times = np.linspace(0.0, 10.0, 101)
    primal = np.where(times < 5.0, 0.0, 3.0)
    return Trajectory.from_path(times, primal)


@pytest.fixture
def simplex_problem():
    region = Simplex(3)
    return QuadraticObjective([0.2, 0.3, 0.5], region=region), region


class TestOccupationFraction:
    def test_path_inside_the_ball(self):
        trajectory = Trajectory.from_path([0.0, 1.0, 2.0], [[0.1, 0.1]] * 3)
        assert diagnostics.occupation_fraction(trajectory, [0.0, 0.0], 0.5) == 1.0

    def test_square_wave_spends_half_the_time_inside(self, square_wave):
        fraction = diagnostics.occupation_fraction(square_wave, [0.0], 1.0, burn_in=0.0)
        assert fraction == pytest.approx(0.5, abs=1 / 100)

    def test_default_burn_in_skips_the_first_fifth(self, square_wave):
        fraction = diagnostics.occupation_fraction(square_wave, [0.0], 1.0)
        assert fraction == pytest.approx(30 / 81)

    def test_ball_covering_the_region(self):
        region = Simplex(3)
        trajectory = Trajectory.from_path(np.arange(5.0), region.vertices()[[0, 1, 2, 0, 1]])  # fmt: skip
        fraction = diagnostics.occupation_fraction(
            trajectory, [1.0, 0.0, 0.0], region.diameter(), burn_in=0.0, region=region
        )
        assert fraction == 1.0

    def test_empty_window_raises(self, square_wave):
        with pytest.raises(ValueError):
            diagnostics.occupation_fraction(square_wave, [0.0], 1.0, burn_in=11.0)

    def test_nonpositive_delta_raises(self, square_wave):
        with pytest.raises(ValueError):
            diagnostics.occupation_fraction(square_wave, [0.0], 0.0)


class TestHittingTime:
    def test_start_inside_the_ball(self, square_wave):
        assert diagnostics.hitting_time(square_wave, [0.0], 0.5) == 0.0

    def test_linear_crossing(self):
        times = np.linspace(0.0, 1.0, 101)
        trajectory = Trajectory.from_path(times, 1.0 - times)
        assert diagnostics.hitting_time(trajectory, [0.0], 0.5) == pytest.approx(0.5, abs=0.01)  # fmt: skip

    def test_path_away_from_the_center(self, square_wave):
        assert diagnostics.hitting_time(square_wave, [10.0], 1.0) is None

    def test_larger_balls_are_hit_earlier(self):
        times = np.linspace(0.0, 1.0, 101)
        trajectory = Trajectory.from_path(times, 1.0 - times)
        hits = [diagnostics.hitting_time(trajectory, [0.0], delta) for delta in (0.8, 0.4, 0.1)]  # fmt: skip
        assert hits == sorted(hits)


class TestFenchelAudit:
    def test_deterministic_run(self, simplex_problem):
        objective, region = simplex_problem
        cfg = IntegratorConfig(dt=1e-3, horizon=5.0)
        trajectory = integrate_md(objective, Regularizer.ENTROPIC, region, 1.0, cfg)
        report = diagnostics.fenchel_audit(
            trajectory,
            Regularizer.ENTROPIC,
            region,
            objective.known_min.point,
            ConstantSchedule(1.0),
            ConstantNoise.zero(3),
            objective,
        )
        assert report.violation_count == 0
        assert report.min_energy >= 0
        np.testing.assert_array_equal(report.ito, 0.0)
        np.testing.assert_array_equal(report.temperature, 0.0)
        assert np.max(np.abs(report.residual)) <= 1e-5
        assert np.all(report.drift <= 0)
        assert report.max_increase_per_step(cfg.dt) <= 1e-6
        assert report.cumulative_drift[-1] < 0

    def test_energy_matches_the_logged_coupling(self, simplex_problem):
        objective, region = simplex_problem
        target = objective.known_min.point
        cfg = IntegratorConfig(dt=1e-2, horizon=5.0, seed=3, log_stride=10)
        schedule = PowerLawSchedule(1.0, 0.5)
        noise = ConstantNoise.isotropic(0.2, 3)
        trajectory = integrate_smd(
            objective, Regularizer.ENTROPIC, region, noise, schedule, cfg, target=target
        )
        report = diagnostics.fenchel_audit(
            trajectory, Regularizer.ENTROPIC, region, target, schedule, noise, objective
        )
        np.testing.assert_allclose(report.energy, trajectory.fenchel, atol=1e-12)
        assert report.min_energy >= -1e-12
        assert np.all(report.ito > 0)

    def test_temperature_term_follows_the_schedule(self):
        region = Simplex(2)
        objective = QuadraticObjective([1.0, 0.0], region=region)
        cfg = IntegratorConfig(dt=1e-2, horizon=4.0, log_stride=10)
        schedule = PowerLawSchedule(1.0, 0.5)
        trajectory = integrate_smd(
            objective, Regularizer.ENTROPIC, region, ConstantNoise.zero(2), schedule, cfg  # fmt: skip
        )
        report = diagnostics.fenchel_audit(
            trajectory,
            Regularizer.ENTROPIC,
            region,
            [1.0, 0.0],
            schedule,
            ConstantNoise.zero(2),
            objective,
        )
        early = report.times[:-1] <= 1.0
        np.testing.assert_array_equal(report.temperature[early], 0.0)
        assert np.all(report.temperature[~early] > 0)

    def test_mean_residual_vanishes_over_an_ensemble(self):
        region = Box.cube(-5.0, 5.0, 2)
        objective = QuadraticObjective([0.0, 0.0], region=region)
        noise = ConstantNoise.isotropic(0.3, 2)
        schedule = ConstantSchedule(1.0)
        target = objective.known_min.point
        cfg = IntegratorConfig(dt=1e-2, horizon=5.0, seed=11, y0=(1.0, 1.0))
        trajectories = simulate_paths(
            objective, Regularizer.EUCLIDEAN, region, noise, schedule, cfg, range(200)
        )
        reports = [
            diagnostics.fenchel_audit(
                trajectory, Regularizer.EUCLIDEAN, region, target, schedule, noise, objective  # fmt: skip
            )
            for trajectory in trajectories
        ]
        residual, residual_se = diagnostics.audit_ensemble(reports)
        assert abs(residual) <= 3 * residual_se + 1e-3
        assert sum(report.violation_count for report in reports) == 0

    def test_infeasible_target_raises(self, simplex_problem):
        objective, region = simplex_problem
        trajectory = integrate_md(
            objective, Regularizer.ENTROPIC, region, 1.0, IntegratorConfig(0.1, 1.0)
        )
        with pytest.raises(InfeasiblePointError):
            diagnostics.fenchel_audit(
                trajectory,
                Regularizer.ENTROPIC,
                region,
                [0.5, 0.6, 0.0],
                ConstantSchedule(1.0),
                ConstantNoise.zero(3),
                objective,
            )

    def test_audit_ensemble_needs_reports(self):
        with pytest.raises(ValueError):
            diagnostics.audit_ensemble([])


class TestRateFit:
    @pytest.fixture
    def times(self):
        return np.logspace(0, 4, 200)

    @pytest.mark.parametrize("exponent", [-1.0, -0.5])
    def test_exact_power_law(self, times, exponent):
        fit = diagnostics.rate_fit(times, times**exponent, (1.0, 1e4))
        assert fit.slope == pytest.approx(exponent, abs=1e-6)
        assert fit.r_squared == pytest.approx(1.0)

    def test_perturbed_power_law(self, times):
        gaps = times**-0.5 * (1 + 0.1 * np.sin(np.log(times)))
        fit = diagnostics.rate_fit(times, gaps, (1.0, 1e4))
        assert fit.slope == pytest.approx(-0.5, abs=0.05)
        assert fit.r_squared >= 0.95

    def test_rescaling_the_gaps_keeps_the_slope(self, times):
        gaps = times**-0.7 * (2 + np.cos(times))
        first = diagnostics.rate_fit(times, gaps, (10.0, 1e4))
        second = diagnostics.rate_fit(times, 37.5 * gaps, (10.0, 1e4))
        assert second.slope == pytest.approx(first.slope, abs=1e-12)

    def test_too_few_points_raises(self, times):
        with pytest.raises(ValueError):
            diagnostics.rate_fit(times, times**-1, (1.0, 1.1))

    def test_nonpositive_gap_raises(self, times):
        gaps = times**-1
        gaps[50] = 0.0
        with pytest.raises(ValueError):
            diagnostics.rate_fit(times, gaps, (1.0, 1e4))


class TestEnsembleSummary:
    def test_constant_path_at_the_target(self):
        trajectory = Trajectory.from_path([0.0, 1.0, 2.0], [[0.5, 0.5]] * 3)
        summary = diagnostics.ensemble_summary([trajectory], [0.5, 0.5], delta=0.1)
        assert summary.mean_sq_distance == 0.0
        assert summary.mean_hitting_time == 0.0
        assert summary.hit_fraction == 1.0
        assert summary.mean_occupation == 1.0

    def test_paths_that_never_hit_count_with_the_horizon(self):
        times = [0.0, 1.0, 4.0]
        trajectories = [
            Trajectory.from_path(times, [[1.0, 0.0], [0.0, 0.0], [0.0, 0.0]]),
            Trajectory.from_path(times, [[1.0, 0.0]] * 3),
        ]
        summary = diagnostics.ensemble_summary(trajectories, [0.0, 0.0], delta=0.1)
        assert summary.hit_fraction == 0.5
        assert summary.mean_hitting_time == pytest.approx(2.5)

    def test_paths_at_fixed_distances(self):
        times = [0.0, 1.0, 2.0]
        trajectories = [
            Trajectory.from_path(times, [[0.1, 0.0]] * 3, f_values=[1.0, 0.5, 0.25]),
            Trajectory.from_path(times, [[0.0, 0.3]] * 3, f_values=[1.0, 0.5, 0.75]),
        ]
        summary = diagnostics.ensemble_summary(trajectories, [0.0, 0.0], f_star=0.25)
        assert summary.paths == 2
        assert summary.mean_sq_distance == pytest.approx(0.05)
        assert summary.final_gap_mean == pytest.approx(0.25)
        assert summary.final_gap_min == pytest.approx(0.0)
        assert summary.final_gap_max == pytest.approx(0.5)
        assert np.isnan(summary.mean_hitting_time)
        assert set(summary.as_dict()) >= {"mean_sq_distance", "final_gap_mean"}

    def test_time_grids_must_match(self):
        first = Trajectory.from_path([0.0, 1.0], [0.0, 0.0])
        second = Trajectory.from_path([0.0, 2.0], [0.0, 0.0])
        with pytest.raises(ValueError):
            diagnostics.ensemble_summary([first, second], [0.0])

    def test_empty_ensemble_raises(self):
        with pytest.raises(ValueError):
            diagnostics.ensemble_summary([], [0.0])


class TestBounds:
    def test_deterministic_bound(self):
        assert diagnostics.deterministic_bound(1.0, 2.0, 5.0) == pytest.approx(0.1)

    def test_rectified_rate_bound_with_constant_sensitivity(self):
        bound = diagnostics.rectified_rate_bound(2.0, 1.0, 0.5, ConstantSchedule(0.5), 10.0)  # fmt: skip
        assert bound == pytest.approx(2.0 / 5.0 + 0.5 * 0.5 / 2.0)

    @pytest.mark.parametrize("beta, expected", [(0.3, 0.3), (0.5, 0.5), (0.7, 0.3)])
    def test_power_law_exponent(self, beta, expected):
        assert diagnostics.power_law_exponent(beta) == pytest.approx(expected)

    def test_optimized_schedule_attains_the_optimized_rate(self):
        depth, modulus, noise_bound = np.log(3), 1.0, 0.5
        schedule = OptimizedSchedule(depth, modulus, noise_bound)
        times = np.array([10.0, 1e3, 1e5])
        rectified = diagnostics.rectified_rate_bound(
            depth, modulus, noise_bound, schedule, times
        )
        optimized = diagnostics.optimized_rate_bound(depth, modulus, noise_bound, times)
        assert np.all(rectified <= optimized)
        assert rectified[-1] == pytest.approx(optimized[-1], rel=1e-2)

    def test_mean_square_bound(self):
        bound = diagnostics.mean_square_bound(1.0, 1.0, 1.0, 1.0, 0.5, 10.0)
        assert bound == pytest.approx(0.7)

    def test_hitting_sensitivity_minimizes_the_hitting_bound(self):
        alpha, modulus, noise_bound, delta = 1.0, 1.0, 0.02, 0.2
        best = diagnostics.hitting_sensitivity(alpha, modulus, noise_bound, delta)
        value = diagnostics.hitting_time_bound(1.0, best, alpha, modulus, noise_bound, delta)  # fmt: skip
        for eta in (0.5 * best, 1.5 * best):
            other = diagnostics.hitting_time_bound(1.0, eta, alpha, modulus, noise_bound, delta)  # fmt: skip
            assert value < other

    def test_hitting_bound_is_infinite_for_large_sensitivity(self):
        assert diagnostics.hitting_time_bound(1.0, 10.0, 1.0, 1.0, 0.02, 0.2) == np.inf

    def test_optimized_hitting_bound(self):
        depth, alpha, modulus, noise_bound, delta = 1.0, 1.0, 1.0, 0.02, 0.2
        eta = diagnostics.hitting_sensitivity(alpha, modulus, noise_bound, delta)
        expected = diagnostics.hitting_time_bound(
            depth, eta, alpha, modulus, noise_bound, delta
        )
        bound = diagnostics.optimized_hitting_bound(depth, alpha, modulus, noise_bound, delta)  # fmt: skip
        assert bound == pytest.approx(expected)

    def test_occupation_sensitivity_guarantees_the_occupation(self):
        eta = diagnostics.occupation_sensitivity(0.1, 1.0, 1.0, 0.02, 0.2)
        assert diagnostics.occupation_bound(eta, 1.0, 1.0, 0.02, 0.2) == pytest.approx(0.9)  # fmt: skip
