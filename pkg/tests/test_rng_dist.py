"""Tests for seeded streams and samplers."""

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal
from scipy import stats

from src.errors import DomainError
from src.numerics.rng_dist import (
    SeededStream,
    exp_power_scale_constant,
    sample_beta,
    sample_dirichlet,
    sample_exp_power,
    sample_gamma,
    sample_inverse_gamma,
    sample_multinomial,
    sample_normal,
    sample_uniform,
    sample_uniform_disk,
    validate_probability_vector,
)


class TestSeededStream:

    def test_equal_coordinates_give_equal_sequences(self):
        a = SeededStream(7, 3, (0, 1)).generator.random(10)
        b = SeededStream(7, 3, (0, 1)).generator.random(10)
        assert_array_equal(a, b)

    @pytest.mark.parametrize("other", [(8, 3, (0, 1)), (7, 4, (0, 1)), (7, 3, (0, 2)), (7, 3, ())])
    def test_distinct_coordinates_differ(self, other):
        a = SeededStream(7, 3, (0, 1)).generator.random(10)
        b = SeededStream(*other).generator.random(10)
        assert not np.array_equal(a, b)

    def test_child_nests_path(self):
        parent = SeededStream(5, 2, (1,))
        child = parent.child(4)
        assert child == SeededStream(5, 4, (1, 2))
        assert_array_equal(child.generator.random(3), SeededStream(5, 4, (1, 2)).generator.random(3))

    def test_negative_stream_id(self):
        with pytest.raises(DomainError):
            SeededStream(1, -1)

    def test_large_seed_is_accepted(self):
        SeededStream(2 ** 70).generator.random()

    def test_describe_names_coordinates(self):
        text = SeededStream(11, 2, (0,)).describe()
        assert "seed=11" in text and "stream=2" in text


class TestBuffers:

    def test_out_buffer_is_filled_in_place(self):
        buf = np.empty(1000)
        out = sample_normal(SeededStream(1), 2.0, 3.0, 1000, out=buf)
        assert out is buf
        assert abs(buf.mean() - 2.0) < 0.5

    def test_wrong_buffer_shape(self):
        with pytest.raises(DomainError):
            sample_uniform(SeededStream(1), 10, out=np.empty(5))

    def test_uniform_range(self):
        u = sample_uniform(SeededStream(1), 10_000)
        assert u.min() >= 0.0 and u.max() < 1.0


class TestMoments:
    """Sample moments against closed forms; tolerances are several standard errors."""

    N = 200_000

    def test_gamma_mean(self):
        x = sample_gamma(SeededStream(2), 2.5, 2.0, size=self.N)
        assert x.mean() == pytest.approx(5.0, abs=0.05)

    def test_beta_mean(self):
        x = sample_beta(SeededStream(3), 2.0, 6.0, self.N)
        assert x.mean() == pytest.approx(0.25, abs=0.005)

    def test_inverse_gamma_mean_and_variance(self):
        x = sample_inverse_gamma(SeededStream(4), 5.0, 4.0, self.N)
        assert x.mean() == pytest.approx(1.0, abs=0.01)
        assert x.var() == pytest.approx(1.0 / 3.0, abs=0.03)

    @pytest.mark.parametrize("q", [1.0, 2.0])
    def test_exp_power_variance_is_tau_squared(self, q):
        x = sample_exp_power(SeededStream(5), 1.5, q, self.N)
        assert x.mean() == pytest.approx(0.0, abs=0.02)
        assert x.var() == pytest.approx(2.25, abs=0.06)

    def test_exp_power_q1_is_laplace(self):
        tau = 1.0
        x = sample_exp_power(SeededStream(6), tau, 1.0, 100_000)
        d = stats.kstest(x, stats.laplace(scale=tau / np.sqrt(2.0)).cdf).statistic
        assert d < 0.01

    def test_exp_power_q2_is_normal(self):
        x = sample_exp_power(SeededStream(7), 2.0, 2.0, 100_000)
        assert stats.kstest(x, stats.norm(scale=2.0).cdf).statistic < 0.01

    def test_scale_constant(self):
        assert exp_power_scale_constant(2.0) == pytest.approx(np.sqrt(0.5), rel=1e-12)
        assert exp_power_scale_constant(1.0) == pytest.approx(np.sqrt(2.0), rel=1e-12)


class TestDirichletMultinomial:

    def test_dirichlet_rows_sum_to_one(self):
        theta = sample_dirichlet(SeededStream(8), [0.5, 1.0, 2.0], size=1000)
        assert theta.shape == (1000, 3)
        assert_allclose(theta.sum(axis=1), 1.0, atol=1e-12)

    def test_dirichlet_single_draw_shape(self):
        assert sample_dirichlet(SeededStream(8), [1.0, 1.0, 1.0]).shape == (3,)

    def test_dirichlet_variance(self):
        theta = sample_dirichlet(SeededStream(9), [10.0, 10.0, 10.0], size=100_000)
        expected = (1.0 / 3.0) * (2.0 / 3.0) / 31.0
        assert theta[:, 0].var() == pytest.approx(expected, rel=0.05)

    def test_dirichlet_rejects_bad_alpha(self):
        with pytest.raises(DomainError):
            sample_dirichlet(SeededStream(1), [1.0, 0.0, 1.0])

    def test_multinomial_per_row_probabilities(self):
        theta = sample_dirichlet(SeededStream(10), [1.0, 1.0, 1.0], size=50)
        counts = sample_multinomial(SeededStream(11), 40, theta)
        assert counts.shape == (50, 3)
        assert_array_equal(counts.sum(axis=1), 40)

    def test_multinomial_degenerate_vector(self):
        counts = sample_multinomial(SeededStream(12), 25, [0.0, 1.0, 0.0])
        assert_array_equal(counts, [0, 25, 0])

    @pytest.mark.parametrize("theta", [[0.5, 0.6, -0.1], [0.3, 0.3, 0.3], [np.nan, 0.5, 0.5]])
    def test_invalid_probability_vectors(self, theta):
        with pytest.raises(DomainError):
            validate_probability_vector(theta)


def test_uniform_disk():
    points = sample_uniform_disk(SeededStream(13), 100_000)
    r2 = np.sum(points ** 2, axis=1)
    assert r2.max() <= 1.0
    # r^2 is uniform on [0, 1]
    assert r2.mean() == pytest.approx(0.5, abs=0.005)
