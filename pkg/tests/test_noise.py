import numpy as np
import pytest

import mirrorflow.noise as noise
from mirrorflow.errors import InvalidParameterError
from mirrorflow.noise import (
    BrownianSource,
    ConstantNoise,
    DecayingNoise,
    DecaySchedule,
    PathCorrelatedNoise,
)
from mirrorflow.traffic import Edge, Network, enumerate_paths


@pytest.fixture
def shared_edge_network():
    # both paths use edge 0, then split over private edges to the destination
    edges = (
        Edge(0, 1, 1.0, 0.0, 0.25),
        Edge(1, 2, 1.0, 0.0, 0.25),
        Edge(1, 2, 1.0, 0.0, 0.25),
    )
    return Network(3, edges, 0, 2)


class TestConstantNoise:
    def test_volatility_ignores_state_and_time(self):
        model = ConstantNoise.isotropic(0.5, 2)
        for x, t in [([0.0, 0.0], 0.0), ([3.0, -1.0], 17.0)]:
            np.testing.assert_array_equal(noise.volatility(model, x, t), 0.5 * np.eye(2))  # fmt: skip

    def test_covariance(self):
        model = ConstantNoise.isotropic(0.5, 2)
        np.testing.assert_allclose(noise.covariance(model, None, 1.0), 0.25 * np.eye(2))

    def test_sup_bound(self):
        assert noise.sup_bound(ConstantNoise.isotropic(0.5, 2)) == pytest.approx(0.5)

    def test_zero_noise(self):
        model = ConstantNoise.zero(3)
        assert model.dim == 3
        assert model.wiener_dim == 1
        assert noise.sup_bound(model) == 0.0

    def test_rectangular_volatility(self):
        model = ConstantNoise([[1.0, 0.0, 2.0], [0.0, 1.0, 0.0]])
        assert (model.dim, model.wiener_dim) == (2, 3)
        assert model.sup_bound() == pytest.approx(6.0)

    @pytest.mark.parametrize("sigma", [[1.0, 2.0], [[np.inf, 0.0], [0.0, 1.0]]])
    def test_invalid_sigma_raises(self, sigma):
        with pytest.raises(InvalidParameterError):
            ConstantNoise(sigma)

    def test_negative_time_raises(self):
        with pytest.raises(ValueError):
            noise.volatility(ConstantNoise.isotropic(1.0, 2), [0.0, 0.0], -1.0)


class TestDecayingNoise:
    def test_inv_log_at_e_squared_minus_e(self):
        model = DecayingNoise(1.0, 2, DecaySchedule.INV_LOG)
        sigma = noise.volatility(model, None, np.e**2 - np.e)
        np.testing.assert_allclose(sigma, 0.5 * np.eye(2))

    def test_inv_sqrt_t(self):
        model = DecayingNoise(2.0, 1, "inv_sqrt_t")
        np.testing.assert_allclose(model.volatility(None, 3.0), [[1.0]])

    def test_sup_bound_is_attained_at_zero(self):
        model = DecayingNoise(1.0, 3, DecaySchedule.INV_SQRT_T)
        assert noise.sup_bound(model) == pytest.approx(3.0)
        trace = np.trace(noise.covariance(model, None, 0.0))
        assert trace == pytest.approx(noise.sup_bound(model))

    def test_trace_never_exceeds_sup_bound(self):
        rng = np.random.default_rng(0)
        for schedule in DecaySchedule:
            model = DecayingNoise(0.7, 2, schedule, power=0.8)
            for t in rng.uniform(0.0, 1e4, size=20):
                trace = np.trace(noise.covariance(model, None, t))
                assert trace <= noise.sup_bound(model) + 1e-12

    def test_log_power_beats_inverse_square_root_of_log(self):
        model = DecayingNoise(1.0, 1, DecaySchedule.LOG_POWER, power=0.75)
        times = np.logspace(1, 6, 30)
        products = model.decay(times) * np.sqrt(np.log(times))
        assert np.all(np.diff(products) < 0)

    def test_log_power_needs_power_above_one_half(self):
        with pytest.raises(InvalidParameterError):
            DecayingNoise(1.0, 2, DecaySchedule.LOG_POWER, power=0.5)

    def test_negative_base_raises(self):
        with pytest.raises(InvalidParameterError):
            DecayingNoise(-1.0, 2)


class TestPathCorrelatedNoise:
    def test_volatility_rows_follow_the_incidence(self, shared_edge_network):
        paths = enumerate_paths(shared_edge_network)
        model = PathCorrelatedNoise.from_network(shared_edge_network, paths)
        expected = [[0.25, 0.25, 0.0], [0.25, 0.0, 0.25]]
        np.testing.assert_array_equal(noise.volatility(model, None, 0.0), expected)

    def test_shared_edge_covariance(self, shared_edge_network):
        paths = enumerate_paths(shared_edge_network)
        model = PathCorrelatedNoise.from_network(shared_edge_network, paths)
        covariance = noise.covariance(model, None, 0.0)
        np.testing.assert_allclose(covariance, [[0.125, 0.0625], [0.0625, 0.125]])
        assert np.all(np.linalg.eigvalsh(covariance) >= -1e-12)
        assert noise.sup_bound(model) == pytest.approx(np.trace(covariance))

    def test_single_path_of_three_edges(self):
        model = PathCorrelatedNoise([[True, True, True]], [0.25, 0.25, 0.25])
        assert noise.covariance(model, None, 0.0)[0, 0] == pytest.approx(0.1875)

    def test_negative_edge_sigma_raises(self):
        with pytest.raises(InvalidParameterError):
            PathCorrelatedNoise([[True, False]], [0.25, -0.1])


class TestBrownianSource:
    def test_draws_are_reproducible(self):
        first = BrownianSource(7, 2).normals(3, 2500)
        second = BrownianSource(7, 2).normals(3, 2500)
        np.testing.assert_array_equal(first, second)

    def test_paths_and_seeds_give_different_streams(self):
        source = BrownianSource(7, 1)
        assert not np.array_equal(source.normals(0, 100), source.normals(1, 100))
        other = BrownianSource(8, 1)
        assert not np.array_equal(source.normals(0, 100), other.normals(0, 100))

    def test_blocks_can_be_generated_independently(self):
        source = BrownianSource(11, 2, block_steps=16)
        normals = source.normals(5, 40)
        np.testing.assert_array_equal(normals[16:32], source.block(5, 1))
        np.testing.assert_array_equal(source.blocks([2, 5], 2)[1], source.block(5, 2))

    def test_increments_have_variance_dt(self):
        increments = BrownianSource(3, 1).increments(0, 200_000, 0.01)
        assert increments.shape == (200_000, 1)
        assert np.var(increments) == pytest.approx(0.01, rel=0.02)
        assert abs(np.mean(increments)) < 1e-3

    def test_empirical_covariation_matches_covariance(self):
        model = ConstantNoise([[1.0, 0.0], [0.5, 0.5]])
        dt, n_steps = 1e-3, 100_000
        increments = BrownianSource(5, model.wiener_dim).increments(0, n_steps, dt)
        dz = increments @ model.sigma.T
        covariation = dz.T @ dz
        expected = noise.covariance(model, None, 0.0) * dt * n_steps
        np.testing.assert_allclose(covariation, expected, atol=0.05 * dt * n_steps)

    def test_zero_steps(self):
        assert BrownianSource(0, 3).normals(0, 0).shape == (0, 3)

    @pytest.mark.parametrize("seed", [-1, 2**64])
    def test_seed_out_of_range_raises(self, seed):
        with pytest.raises(InvalidParameterError):
            BrownianSource(seed, 1)
