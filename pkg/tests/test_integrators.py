import numpy as np
import pytest

from mirrorflow.dynamics import (
    ConstantSchedule,
    IntegratorConfig,
    PowerLawSchedule,
    integrate_md,
    integrate_smd,
    run_ensemble,
    simulate_paths,
)
from mirrorflow.dynamics.ensemble import path_batches
from mirrorflow.errors import DimensionMismatchError, InfeasiblePointError, NumericalAbort  # fmt: skip
from mirrorflow.geometry import Box, Simplex
from mirrorflow.mirror import Regularizer, regularizer_depth
from mirrorflow.noise import BrownianSource, ConstantNoise
from mirrorflow.problems import LinearObjective, QuadraticObjective, ScalarObjective


EUCLIDEAN = Regularizer.EUCLIDEAN
ENTROPIC = Regularizer.ENTROPIC


@pytest.fixture
def unit_square():
    return Box.cube(0.0, 1.0, 2)


@pytest.fixture
def simplex_problem():
    region = Simplex(3)
    return QuadraticObjective([0.2, 0.3, 0.5], region=region), region


class TestIntegrateMD:
    def test_started_at_the_minimizer_stays_there(self, unit_square):
        objective = QuadraticObjective([0.3, 0.6], region=unit_square)
        cfg = IntegratorConfig(dt=1e-2, horizon=5.0, y0=(0.3, 0.6))
        trajectory = integrate_md(objective, EUCLIDEAN, unit_square, 1.0, cfg)
        assert np.max(np.abs(trajectory.primal - [0.3, 0.6])) <= 1e-9

    def test_deterministic_rate(self, unit_square):
        objective = QuadraticObjective([0.5, 0.5], region=unit_square)
        cfg = IntegratorConfig(dt=1e-3, horizon=50.0, log_stride=1000)
        trajectory = integrate_md(objective, EUCLIDEAN, unit_square, 1.0, cfg)
        depth = regularizer_depth(EUCLIDEAN, unit_square)
        assert trajectory.f_mean[-1] - objective.known_min.value <= depth / 50.0

    def test_linear_objective_reaches_the_corner_and_stays(self):
        region = Box([0.0], [1.0])
        objective = ScalarObjective(slope=-1.0, offset=1.0, region=region)
        cfg = IntegratorConfig(dt=1e-2, horizon=3.0)
        trajectory = integrate_md(objective, EUCLIDEAN, region, 1.0, cfg)
        late = trajectory.times >= 1.0 + 1e-9
        np.testing.assert_array_equal(trajectory.primal[late, 0], 1.0)
        np.testing.assert_allclose(trajectory.dual[:, 0], trajectory.times, atol=1e-12)

    def test_lyapunov_function_does_not_increase(self, simplex_problem):
        objective, region = simplex_problem
        cfg = IntegratorConfig(dt=1e-3, horizon=5.0)
        target = objective.known_min.point
        trajectory = integrate_md(objective, ENTROPIC, region, 1.0, cfg, target=target)
        assert trajectory.fenchel[0] > 0
        assert np.all(np.diff(trajectory.fenchel) <= 1e-6)

    def test_primal_path_is_the_mirror_image_of_the_dual_path(self, simplex_problem):
        objective, region = simplex_problem
        cfg = IntegratorConfig(dt=1e-2, horizon=2.0, log_stride=10)
        trajectory = integrate_md(objective, ENTROPIC, region, 0.5, cfg)
        scores = 0.5 * trajectory.dual
        expected = np.exp(scores) / np.sum(np.exp(scores), axis=1, keepdims=True)
        np.testing.assert_allclose(trajectory.primal, expected, atol=1e-12)

    def test_nonfinite_state_aborts_with_the_step(self):
        region = Box([-1.0], [1.0])
        cfg = IntegratorConfig(dt=1.0, horizon=10.0)
        with pytest.raises(NumericalAbort) as error:
            integrate_md(LinearObjective([1e308]), EUCLIDEAN, region, 1.0, cfg)
        assert error.value.step == 2
        assert error.value.time == 2.0

    def test_infeasible_target_raises(self, unit_square):
        objective = QuadraticObjective([0.5, 0.5])
        cfg = IntegratorConfig(dt=0.1, horizon=1.0)
        with pytest.raises(InfeasiblePointError):
            integrate_md(objective, EUCLIDEAN, unit_square, 1.0, cfg, target=[2.0, 0.0])


class TestIntegrateSMD:
    @pytest.fixture
    def setup(self, simplex_problem):
        objective, region = simplex_problem
        noise = ConstantNoise.isotropic(0.5, 3)
        cfg = IntegratorConfig(dt=1e-2, horizon=20.0, seed=42, log_stride=5)
        return objective, region, noise, cfg

    def test_zero_noise_reproduces_mirror_descent(self, simplex_problem):
        objective, region = simplex_problem
        cfg = IntegratorConfig(dt=1e-2, horizon=10.0, seed=3)
        smd = integrate_smd(
            objective,
            ENTROPIC,
            region,
            ConstantNoise.zero(3),
            ConstantSchedule(0.7),
            cfg,
        )
        md = integrate_md(objective, ENTROPIC, region, 0.7, cfg)
        np.testing.assert_array_equal(smd.primal, md.primal)
        np.testing.assert_array_equal(smd.dual, md.dual)

    def test_same_seed_gives_identical_paths(self, setup):
        objective, region, noise, cfg = setup
        schedule = PowerLawSchedule(1.0, 0.5)
        first = integrate_smd(objective, ENTROPIC, region, noise, schedule, cfg)
        second = integrate_smd(objective, ENTROPIC, region, noise, schedule, cfg)
        np.testing.assert_array_equal(first.dual, second.dual)
        np.testing.assert_array_equal(first.f_values, second.f_values)

    def test_other_seed_or_path_gives_another_path(self, setup):
        objective, region, noise, cfg = setup
        schedule = ConstantSchedule(1.0)
        reference = integrate_smd(objective, ENTROPIC, region, noise, schedule, cfg)
        other_path = integrate_smd(
            objective, ENTROPIC, region, noise, schedule, cfg, path_index=1
        )
        other_seed = integrate_smd(
            objective,
            ENTROPIC,
            region,
            noise,
            schedule,
            IntegratorConfig(dt=1e-2, horizon=20.0, seed=43, log_stride=5),
        )
        assert not np.array_equal(reference.dual, other_path.dual)
        assert not np.array_equal(reference.dual, other_seed.dual)

    def test_primal_points_are_feasible(self, setup):
        objective, region, noise, cfg = setup
        trajectory = integrate_smd(
            objective, ENTROPIC, region, noise, PowerLawSchedule(2.0, 0.3), cfg
        )
        assert np.all(region.contains(trajectory.primal, 1e-9))
        assert trajectory.fenchel is None

    def test_logged_series_are_consistent(self, setup):
        objective, region, noise, cfg = setup
        trajectory = integrate_smd(
            objective, ENTROPIC, region, noise, ConstantSchedule(1.0), cfg
        )
        np.testing.assert_array_equal(trajectory.times, cfg.log_steps() * cfg.dt)
        np.testing.assert_array_equal(
            trajectory.f_best, np.minimum.accumulate(trajectory.f_values)
        )
        values, _ = objective.value_and_gradient(trajectory.primal)
        np.testing.assert_allclose(trajectory.f_values, values)

    def test_noise_dimension_mismatch_raises(self, setup):
        objective, region, _, cfg = setup
        with pytest.raises(DimensionMismatchError):
            integrate_smd(
                objective,
                ENTROPIC,
                region,
                ConstantNoise.isotropic(0.5, 2),
                ConstantSchedule(1.0),
                cfg,
            )

    def test_increment_shape_mismatch_raises(self, setup):
        objective, region, noise, cfg = setup
        with pytest.raises(DimensionMismatchError):
            integrate_smd(
                objective,
                ENTROPIC,
                region,
                noise,
                ConstantSchedule(1.0),
                cfg,
                increments=np.zeros((10, 3)),
            )

    def test_linear_dual_drifts_with_unit_slope(self):
        region = Box([0.0], [1.0])
        objective = ScalarObjective(slope=-1.0, offset=1.0, region=region)
        noise = ConstantNoise.isotropic(0.5, 1)
        cfg = IntegratorConfig(dt=1e-2, horizon=50.0, seed=9, log_stride=100)
        trajectories = simulate_paths(
            objective, ENTROPIC, region, noise, ConstantSchedule(1.0), cfg, range(200)
        )
        terminal = np.array([trajectory.dual[-1, 0] for trajectory in trajectories])
        assert np.mean(terminal) / 50.0 == pytest.approx(1.0, abs=0.05)
        assert np.var(terminal) / 50.0 == pytest.approx(0.25, rel=0.35)
        assert all(trajectory.primal[-1, 0] > 0.99 for trajectory in trajectories)

    def test_strong_error_shrinks_with_the_step(self):
        region = Box.cube(-10.0, 10.0, 1)
        objective = QuadraticObjective([0.0], region=region)
        noise = ConstantNoise.isotropic(1.0, 1)
        schedule = ConstantSchedule(1.0)
        horizon, coarse_dt, n_paths = 1.0, 0.02, 20
        fine_dt = coarse_dt / 16
        n_fine = int(round(horizon / fine_dt))
        source = BrownianSource(7, 1)
        fine = np.stack([source.increments(path, n_fine, fine_dt) for path in range(n_paths)])  # fmt: skip

        def terminal_states(dt):
            factor = int(round(dt / fine_dt))
            increments = fine.reshape(n_paths, n_fine // factor, factor, 1).sum(axis=2)
            cfg = IntegratorConfig(dt=dt, horizon=horizon, y0=(1.0,))
            trajectories = simulate_paths(
                objective,
                EUCLIDEAN,
                region,
                noise,
                schedule,
                cfg,
                range(n_paths),
                increments=increments,
            )
            return np.array([trajectory.primal[-1, 0] for trajectory in trajectories])

        reference = terminal_states(fine_dt)
        error = np.mean(np.abs(terminal_states(coarse_dt) - reference))
        half_step_error = np.mean(np.abs(terminal_states(coarse_dt / 2) - reference))
        assert half_step_error < 0.9 * error


class TestRunEnsemble:
    @pytest.fixture
    def arguments(self, simplex_problem):
        objective, region = simplex_problem
        noise = ConstantNoise.isotropic(0.3, 3)
        cfg = IntegratorConfig(dt=1e-2, horizon=2.0, seed=5, log_stride=10)
        return objective, ENTROPIC, region, noise, PowerLawSchedule(1.0, 0.5), cfg

    def test_paths_are_ordered_by_index(self, arguments):
        trajectories = run_ensemble(*arguments, paths=5, batch_size=2)
        assert [trajectory.path_index for trajectory in trajectories] == list(range(5))

    def test_result_does_not_depend_on_the_worker_count(self, arguments):
        serial = run_ensemble(*arguments, paths=5, threads=1, batch_size=2)
        parallel = run_ensemble(*arguments, paths=5, threads=2, batch_size=2)
        for first, second in zip(serial, parallel):
            np.testing.assert_array_equal(first.dual, second.dual)
            np.testing.assert_array_equal(first.primal, second.primal)

    def test_path_does_not_depend_on_its_batch_neighbours(self, arguments):
        ensemble = run_ensemble(*arguments, paths=4, batch_size=4)
        alone = integrate_smd(*arguments, path_index=2)
        np.testing.assert_allclose(ensemble[2].dual, alone.dual, rtol=0, atol=1e-12)

    def test_target_adds_the_fenchel_series(self, arguments, simplex_problem):
        objective, _ = simplex_problem
        trajectories = run_ensemble(*arguments, paths=2, target=objective.known_min.point)  # fmt: skip
        for trajectory in trajectories:
            assert trajectory.fenchel.shape == trajectory.times.shape
            assert np.all(trajectory.fenchel >= -1e-12)

    @pytest.mark.parametrize(
        "paths, batch_size, expected",
        [(5, 2, [range(0, 2), range(2, 4), range(4, 5)]), (3, 256, [range(0, 3)])],
    )
    def test_path_batches(self, paths, batch_size, expected):
        assert path_batches(paths, batch_size) == expected

    def test_empty_ensemble_raises(self):
        with pytest.raises(ValueError):
            path_batches(0)
