"""
Calibration of a statistic against its simulated reference distribution.

Every p-value here is rank based: the observed statistic is located in the
sorted reference draws and the add-one estimator (1 + count) / (n + 1) is
returned, so p-values are never 0 and any strictly increasing transform of
the statistic gives identical results.
"""

from typing import Optional, Sequence, Tuple, Union

import numpy as np
from scipy import stats

from ..data.models import CheckResult, DrawsSummary, PriorExpansionSpec, Tail
from ..errors import DomainError

ArrayLike = Union[float, Sequence[float], np.ndarray]


class ReferenceDistribution:
    """Sorted simulated statistics with tail-probability lookups."""

    def __init__(self, draws: ArrayLike, n_dropped: int = 0):
        draws = np.asarray(draws, dtype=float).ravel()
        if draws.size == 0:
            raise DomainError("reference distribution needs at least one draw")
        if not np.all(np.isfinite(draws)):
            raise DomainError("reference draws must be finite")
        self._sorted = np.sort(draws)
        self._sorted.setflags(write=False)
        self.n_dropped = n_dropped

    @property
    def n_draws(self) -> int:
        return int(self._sorted.size)

    @property
    def draws(self) -> np.ndarray:
        """Sorted, read-only reference statistics."""
        return self._sorted

    def tail_counts(self, obs: ArrayLike) -> Tuple[np.ndarray, np.ndarray]:
        """
        Count reference draws at or beyond each observed value.

        Returns:
            Tuple of (#{S >= obs}, #{S <= obs}); ties count toward both tails
        """
        obs = np.asarray(obs, dtype=float)
        upper = self.n_draws - np.searchsorted(self._sorted, obs, side='left')
        lower = np.searchsorted(self._sorted, obs, side='right')
        return upper, lower

    def p_value(self, obs: ArrayLike, tail: Tail = Tail.UPPER):
        """
        Add-one Monte Carlo p-value(s) for observed statistic(s).

        Args:
            obs: Observed statistic, scalar or array
            tail: upper, lower or two_sided (2 * min of the one-sided values, capped at 1)

        Returns:
            float for scalar input, array otherwise
        """
        tail = Tail(tail)
        upper, lower = self.tail_counts(obs)
        n = self.n_draws
        p_upper = (1.0 + upper) / (n + 1.0)
        p_lower = (1.0 + lower) / (n + 1.0)
        if tail is Tail.UPPER:
            p = p_upper
        elif tail is Tail.LOWER:
            p = p_lower
        else:
            p = np.minimum(1.0, 2.0 * np.minimum(p_upper, p_lower))
        return float(p) if np.ndim(p) == 0 else p

    def quantiles(self, levels: ArrayLike) -> np.ndarray:
        levels = np.asarray(levels, dtype=float)
        if np.any((levels < 0) | (levels > 1)):
            raise DomainError("quantile levels must lie in [0, 1]")
        return np.quantile(self._sorted, levels)

    def critical_values(self, alpha: float = 0.05) -> Tuple[float, float]:
        """Equal-tailed (alpha/2, 1 - alpha/2) band of the reference."""
        lower, upper = self.quantiles([alpha / 2.0, 1.0 - alpha / 2.0])
        return float(lower), float(upper)

    def summary(self) -> DrawsSummary:
        s = self._sorted
        return DrawsSummary(
            mean=float(np.mean(s)),
            sd=float(np.std(s, ddof=1)) if s.size > 1 else 0.0,
            min=float(s[0]),
            max=float(s[-1])
        )

    def check(self, statistic_obs: float, tail: Tail, base_seed: int,
              expansion: Optional[PriorExpansionSpec] = None, label: str = "") -> CheckResult:
        """Package the p-value of one observed statistic as a CheckResult."""
        if not np.isfinite(statistic_obs):
            raise DomainError(f"observed statistic is not finite: {statistic_obs}")
        return CheckResult(
            statistic_obs=float(statistic_obs),
            p_value=self.p_value(statistic_obs, tail),
            n_draws=self.n_draws,
            tail=Tail(tail),
            base_seed=base_seed,
            draws_summary=self.summary(),
            expansion=expansion,
            label=label
        )


def rejection_rate(p_values: ArrayLike, alpha: float) -> float:
    """Fraction of p-values at or below alpha."""
    p_values = np.asarray(p_values, dtype=float)
    if p_values.size == 0:
        raise DomainError("no p-values given")
    return float(np.mean(p_values <= alpha))


def ks_distance_uniform(p_values: ArrayLike) -> float:
    """Kolmogorov distance between the empirical CDF of p-values and U(0, 1)."""
    p_values = np.asarray(p_values, dtype=float)
    if p_values.size == 0:
        raise DomainError("no p-values given")
    return float(stats.kstest(p_values, 'uniform').statistic)
