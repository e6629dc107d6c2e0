"""Tests for rank-based p-values against a reference distribution."""

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from src.checking.calibration import ReferenceDistribution, ks_distance_uniform, rejection_rate
from src.data.models import Tail
from src.errors import DomainError


class TestReferenceDistribution:

    ref = ReferenceDistribution([4.0, 1.0, 3.0, 2.0])

    def test_add_one_estimator(self):
        assert self.ref.p_value(3.0, Tail.UPPER) == pytest.approx(3.0 / 5.0)
        assert self.ref.p_value(3.0, Tail.LOWER) == pytest.approx(4.0 / 5.0)
        assert self.ref.p_value(3.0, Tail.TWO_SIDED) == 1.0
        assert self.ref.p_value(10.0, Tail.UPPER) == pytest.approx(1.0 / 5.0)
        assert self.ref.p_value(10.0, Tail.TWO_SIDED) == pytest.approx(2.0 / 5.0)

    def test_ties_count_toward_both_tails(self):
        upper, lower = ReferenceDistribution([1.0, 2.0, 2.0, 3.0]).tail_counts(2.0)
        assert (int(upper), int(lower)) == (3, 3)

    def test_vectorised(self):
        p = self.ref.p_value(np.array([0.0, 2.5, 5.0]), "upper")
        assert_allclose(p, [1.0, 3.0 / 5.0, 1.0 / 5.0])

    def test_never_zero(self):
        assert self.ref.p_value(-1e300, Tail.LOWER) > 0.0

    def test_invariant_under_increasing_transform(self):
        draws = np.random.default_rng(0).normal(size=500)
        obs = np.array([-1.0, 0.3, 2.2])
        raw = ReferenceDistribution(draws).p_value(obs, Tail.TWO_SIDED)
        transformed = ReferenceDistribution(np.exp(draws)).p_value(np.exp(obs), Tail.TWO_SIDED)
        assert_array_equal(raw, transformed)

    def test_critical_values_are_quantiles(self):
        draws = np.random.default_rng(1).normal(size=2001)
        ref = ReferenceDistribution(draws)
        assert ref.critical_values(0.1) == pytest.approx(tuple(np.quantile(draws, [0.05, 0.95])))

    def test_summary(self):
        summary = self.ref.summary()
        assert (summary.mean, summary.min, summary.max) == (2.5, 1.0, 4.0)
        assert summary.sd == pytest.approx(np.std([1, 2, 3, 4], ddof=1))

    def test_check_packages_result(self):
        result = self.ref.check(3.5, Tail.UPPER, base_seed=9, label="demo")
        assert result.p_value == pytest.approx(2.0 / 5.0)
        assert result.n_draws == 4 and result.base_seed == 9 and result.label == "demo"

    def test_rejects_bad_inputs(self):
        with pytest.raises(DomainError):
            ReferenceDistribution([])
        with pytest.raises(DomainError):
            ReferenceDistribution([1.0, np.nan])
        with pytest.raises(DomainError):
            self.ref.check(np.inf, Tail.UPPER, 1)
        with pytest.raises(DomainError):
            self.ref.quantiles([1.5])


def test_rejection_rate():
    assert rejection_rate([0.01, 0.2, 0.05], 0.05) == pytest.approx(2.0 / 3.0)
    with pytest.raises(DomainError):
        rejection_rate([], 0.05)


def test_ks_distance_uniform():
    rng = np.random.default_rng(2)
    assert ks_distance_uniform(rng.random(10_000)) < 0.02
    assert ks_distance_uniform(rng.random(10_000) ** 2) > 0.2
