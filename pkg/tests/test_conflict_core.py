"""Tests for the generic conflict-check engine."""

import logging

import numpy as np
import pytest

from src.checking.calibration import ks_distance_uniform
from src.checking.conflict_core import (
    HierarchicalSampler,
    evaluate_statistic,
    hierarchical_check,
    mc_p_value,
    mixture_score,
    posterior_expected_score,
    power_curve,
    power_curves,
    simulate_reference,
)
from src.data.models import McConfig, Tail
from src.errors import DomainError, NumericalError
from src.numerics.rng_dist import SeededStream


def standard_normal_sampler(stream, size):
    return stream.generator.standard_normal(size)


def identity(x):
    return x


def nan_first(x):
    x = np.array(x, dtype=float)
    x[0] = np.nan
    return x


def wrong_length(x):
    return np.asarray(x)[:-1]


class TestMcPValue:

    def test_upper_tail_against_closed_form(self, cfg):
        result = mc_p_value(identity, 1.959963984540054, standard_normal_sampler,
                            cfg.replace(n_draws=20_000, tail=Tail.UPPER), vectorized=True)
        se = np.sqrt(0.025 * 0.975 / 20_000)
        assert abs(result.p_value - 0.025) < 4 * se

    def test_identical_across_worker_counts(self, cfg):
        one = mc_p_value(np.abs, 1.5, standard_normal_sampler, cfg, vectorized=True)
        four = mc_p_value(np.abs, 1.5, standard_normal_sampler, cfg.replace(n_workers=4), vectorized=True)
        assert one.p_value == four.p_value
        assert one.draws_summary == four.draws_summary

    def test_vectorized_and_scalar_statistics_agree(self, small_cfg):
        scalar = mc_p_value(abs, 1.0, standard_normal_sampler, small_cfg)
        batch = mc_p_value(np.abs, 1.0, standard_normal_sampler, small_cfg, vectorized=True)
        assert scalar.p_value == batch.p_value
        assert scalar.statistic_obs == batch.statistic_obs

    def test_seed_changes_result(self, small_cfg):
        a = mc_p_value(identity, 0.3, standard_normal_sampler, small_cfg, vectorized=True)
        b = mc_p_value(identity, 0.3, standard_normal_sampler, small_cfg.replace(base_seed=99), vectorized=True)
        assert a.p_value != b.p_value

    def test_p_value_floor(self, small_cfg):
        result = mc_p_value(identity, 100.0, standard_normal_sampler, small_cfg, vectorized=True)
        assert result.p_value == pytest.approx(1.0 / (small_cfg.n_draws + 1))
        assert result.p_value == pytest.approx(result.p_value_floor)


class TestNonFinite:

    def test_few_non_finite_values_are_dropped(self, caplog):
        cfg = McConfig(n_draws=10_000, chunk_size=5000)
        with caplog.at_level(logging.WARNING):
            ref = simulate_reference(nan_first, standard_normal_sampler, cfg, vectorized=True)
        assert ref.n_dropped == 2
        assert ref.n_draws == 9998
        assert "non-finite" in caplog.text

    def test_many_non_finite_values_raise(self):
        cfg = McConfig(n_draws=1000, chunk_size=100)
        with pytest.raises(NumericalError, match="seed="):
            simulate_reference(nan_first, standard_normal_sampler, cfg, vectorized=True)

    def test_observed_statistic_must_be_finite(self):
        with pytest.raises(DomainError):
            evaluate_statistic(lambda x: np.nan, 1.0)

    def test_statistic_must_return_one_value_per_replicate(self, small_cfg):
        with pytest.raises(DomainError):
            simulate_reference(wrong_length, standard_normal_sampler, small_cfg, vectorized=True)


class TestCalibration:

    def test_p_values_uniform_under_null(self, cfg):
        reference = simulate_reference(np.abs, standard_normal_sampler, cfg, vectorized=True)
        fresh = np.abs(SeededStream(cfg.base_seed, 0, (9,)).generator.standard_normal(2000))
        assert ks_distance_uniform(reference.p_value(fresh, Tail.UPPER)) < 0.05


class TestScores:

    def test_mixture_score_constant_ratio(self):
        draws = np.zeros(10)
        assert mixture_score(lambda t: np.zeros_like(t), draws) == pytest.approx(0.0)
        assert mixture_score(lambda t: np.full_like(t, np.log(2.0)), draws) == pytest.approx(1.0)

    def test_mixture_score_has_zero_prior_mean(self):
        # E_g[q/g] = 1 when theta ~ g, here g = N(0, 1) and q = N(0.5, 1)
        draws = np.random.default_rng(3).standard_normal(100_000)
        score = mixture_score(lambda t: 0.5 * t - 0.125, draws)
        assert abs(score) < 0.01

    def test_mixture_score_scalar_ratio(self):
        draws = np.array([0.0, 1.0])
        assert mixture_score(lambda t: 0.0, draws, vectorized=False) == pytest.approx(0.0)

    def test_mixture_score_support_mismatch(self):
        with pytest.raises(DomainError):
            mixture_score(lambda t: np.full_like(t, np.inf), np.zeros(3))

    def test_posterior_expected_score(self):
        mean, se = posterior_expected_score(lambda t: t, np.array([1.0, 2.0, 3.0]))
        assert mean == pytest.approx(2.0)
        assert se == pytest.approx(1.0 / np.sqrt(3.0))
        with pytest.raises(DomainError):
            posterior_expected_score(lambda t: t, np.array([1.0]))


class ThresholdCheck:
    """Rejects with certainty once gamma exceeds a threshold."""

    def __init__(self, threshold):
        self.threshold = threshold

    def evaluate(self, stream, gamma, size):
        p = 0.01 if gamma > self.threshold else 0.9
        return {"a": np.full(size, p), "b": stream.generator.random(size)}


class FailingCheck:

    def evaluate(self, stream, gamma, size):
        raise ValueError("no data")


class TestPowerCurves:

    def test_rejection_rates(self, small_cfg):
        curves = power_curves(ThresholdCheck(0.5), [0.0, 1.0], 100, small_cfg, label="demo")
        assert curves["a"].power == [0.0, 1.0]
        assert curves["a"].label == "demo:a"
        assert all(abs(p - 0.05) < 0.1 for p in curves["b"].power)

    def test_independent_of_workers(self, small_cfg):
        one = power_curves(ThresholdCheck(0.5), [0.0, 0.7, 1.0], 60, small_cfg)
        three = power_curves(ThresholdCheck(0.5), [0.0, 0.7, 1.0], 60, small_cfg.replace(n_workers=3))
        assert one["b"].power == three["b"].power

    def test_single_curve(self, small_cfg):
        curve = power_curve(ThresholdCheck(0.5), [1.0], 10, small_cfg, statistic="a")
        assert curve.power == [1.0]
        with pytest.raises(DomainError):
            power_curve(ThresholdCheck(0.5), [1.0], 10, small_cfg)
        with pytest.raises(DomainError):
            power_curve(ThresholdCheck(0.5), [1.0], 10, small_cfg, statistic="c")

    def test_errors_name_gamma(self, small_cfg):
        with pytest.raises(NumericalError, match="gamma=0.25"):
            power_curves(FailingCheck(), [0.25], 10, small_cfg)

    def test_needs_replicates(self, small_cfg):
        with pytest.raises(DomainError):
            power_curves(ThresholdCheck(0.5), [0.0], 0, small_cfg)


def test_hierarchical_sampler_chains_draws():
    sampler = HierarchicalSampler(
        lambda stream, size: np.full(size, 2.0),
        lambda stream, theta1: theta1 + 1.0,
        lambda stream, theta1, theta2: np.column_stack([theta1, theta2])
    )
    batch = sampler(SeededStream(1), 4)
    assert batch.shape == (4, 2)
    assert np.all(batch == [2.0, 3.0])


POINT_MASS_SCALE = 1.5
POINT_MASS_DRAWS = 50


def point_mass_posterior(stream, size):
    return np.full(size, POINT_MASS_SCALE)


def scaled_normal_prior(stream, theta1):
    return theta1 * stream.generator.standard_normal(np.shape(theta1))


def five_observations(stream, theta1, theta2):
    noise = stream.generator.standard_normal((np.size(theta2), 5))
    return theta2[:, None] + np.asarray(theta1)[:, None] * noise


def squared_mean_score(data, theta1):
    return np.mean(data) ** 2 / np.asarray(theta1) ** 2


def test_point_mass_posterior_reduces_to_plain_check(small_cfg):
    obs = np.array([2.0, 3.1, 1.7, 2.6, 2.2])
    hierarchical = hierarchical_check(
        squared_mean_score, point_mass_posterior, scaled_normal_prior, five_observations,
        obs, small_cfg, n_posterior=POINT_MASS_DRAWS
    )

    def averaged_at_point(data):
        return float(np.mean(squared_mean_score(data, np.full(POINT_MASS_DRAWS, POINT_MASS_SCALE))))

    def conditional_predictive(stream, size):
        theta1 = np.full(size, POINT_MASS_SCALE)
        return five_observations(stream, theta1, scaled_normal_prior(stream, theta1))

    plain = mc_p_value(averaged_at_point, obs, conditional_predictive, small_cfg)
    assert hierarchical.p_value == plain.p_value
    assert hierarchical.statistic_obs == plain.statistic_obs
    assert hierarchical.n_draws == plain.n_draws
