"""
Conflict checks for the Laplace (LASSO) prior.

The Laplace prior is embedded in the exponential power family with shape q
(q = 1 is Laplace, q = 2 normal) and checked against the data with either
the kurtosis statistic or the plug-in score in q. Both are calibrated
two-sided against their prior predictive distribution at q = 1.

Two settings are covered: many normal means (xbar ~ N(mu, I/m)) and linear
regression with least-squares (minimum-norm) estimates.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import partial
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.special import gamma as gamma_fn
from scipy.special import xlogy

from ..checking.calibration import ReferenceDistribution
from ..checking.conflict_core import power_curves, simulate_reference
from ..data.models import CheckResult, McConfig, PowerCurve, PriorExpansionSpec, Tail
from ..errors import DomainError
from ..numerics.rng_dist import SeededStream, exp_power_scale_constant, sample_exp_power
from ..numerics.special_fn import digamma, log_gamma

logger = logging.getLogger(__name__)

MIN_REFERENCE_DRAWS = 10_000
PSEUDO_INVERSE_RCOND = 1e-10


class LassoStatistic(str, Enum):
    KURTOSIS = "kurtosis"
    SCORE = "score"


class ScoreConvention(str, Enum):
    """
    How the constant A(1) enters the plug-in score.

    display: A + B sum(u) + C sum(u log u), a single A
    sum:     n A + ..., the exact derivative of the product log density
    mean:    the sum form divided by n (per-coordinate average)
    tabulated: the mean form with A built from psi(2) in place of psi(3)
               (A = -0.5), the scale of the usual critical-value table

    The conventions differ by affine maps with positive slope for fixed n,
    so p-values are identical across them.
    """
    DISPLAY = "display"
    SUM = "sum"
    MEAN = "mean"
    TABULATED = "tabulated"


@dataclass(frozen=True)
class ScoreConstants:
    """Coefficients of d/dq log g(nu | tau, q) at q = 1, per coordinate."""
    A1: float
    B1: float
    C1: float
    A1_tabulated: float

    @classmethod
    def at_one(cls) -> 'ScoreConstants':
        root_gamma3 = float(np.sqrt(gamma_fn(3.0)))
        return cls(
            A1=1.0 + 1.5 * (digamma(1.0) - digamma(3.0)),
            B1=-root_gamma3 * (log_gamma(3.0) + digamma(1.0) - 3.0 * digamma(3.0)) / 2.0,
            C1=-root_gamma3,
            A1_tabulated=1.0 + 1.5 * (digamma(1.0) - digamma(2.0))
        )


SCORE_CONSTANTS = ScoreConstants.at_one()


def exp_power_log_density(nu, tau: float, q: float):
    """log g(nu | tau, q) of the exponential power prior (variance tau^2)."""
    if tau <= 0 or q <= 0:
        raise DomainError(f"tau and q must be > 0, got tau={tau}, q={q}")
    u = np.abs(np.asarray(nu, dtype=float) / tau)
    log_norm = (np.log(q) - np.log(2.0 * tau)
                + 0.5 * (log_gamma(3.0 / q) - 3.0 * log_gamma(1.0 / q)))
    return log_norm - exp_power_scale_constant(q) ** q * u ** q


def kurtosis_stat(xbar):
    """sum x^4 / (sum x^2)^2 along the last axis."""
    x = np.asarray(xbar, dtype=float)
    x2 = np.sum(x * x, axis=-1)
    if np.any(x2 == 0):
        raise DomainError("kurtosis is undefined for an all-zero vector")
    k = np.sum(x ** 4, axis=-1) / (x2 * x2)
    return float(k) if np.ndim(k) == 0 else k


def approx_score_stat(estimates, tau: float = 1.0,
                      convention: ScoreConvention = ScoreConvention.DISPLAY,
                      constants: ScoreConstants = SCORE_CONSTANTS):
    """
    Plug-in score A + B sum|mu/tau| + C sum |mu/tau| log|mu/tau| along the last axis.

    Zero estimates contribute 0 to the u log u sum.
    """
    if tau <= 0:
        raise DomainError(f"tau must be > 0, got {tau}")
    u = np.abs(np.asarray(estimates, dtype=float) / tau)
    n = u.shape[-1]
    body = constants.B1 * np.sum(u, axis=-1) + constants.C1 * np.sum(xlogy(u, u), axis=-1)
    convention = ScoreConvention(convention)
    if convention is ScoreConvention.DISPLAY:
        stat = constants.A1 + body
    elif convention is ScoreConvention.SUM:
        stat = n * constants.A1 + body
    elif convention is ScoreConvention.MEAN:
        stat = constants.A1 + body / n
    else:
        stat = constants.A1_tabulated + body / n
    return float(stat) if np.ndim(stat) == 0 else stat


def lasso_statistic(kind: LassoStatistic, estimates, tau: float = 1.0,
                    convention: ScoreConvention = ScoreConvention.DISPLAY):
    """Statistic used by the checks; kurtosis is reported on the n * k axis."""
    kind = LassoStatistic(kind)
    if kind is LassoStatistic.KURTOSIS:
        n = np.shape(estimates)[-1]
        return n * kurtosis_stat(estimates)
    return approx_score_stat(estimates, tau, convention)


# ---------------------------------------------------------------------------
# Many normal means
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ManyMeansSetup:
    """n means, each observed as the average of m unit-variance draws."""
    n: int
    m: int = 20
    tau: float = 1.0
    q0: float = 1.0

    def __post_init__(self):
        if self.n < 2:
            raise DomainError(f"n must be >= 2, got {self.n}")
        if self.m < 1:
            raise DomainError(f"m must be >= 1, got {self.m}")
        if self.tau <= 0 or self.q0 <= 0:
            raise DomainError("tau and q0 must be > 0")

    def expansion(self) -> PriorExpansionSpec:
        return PriorExpansionSpec(
            family="exponential_power_shape",
            gamma0=self.q0,
            hyperparameters={'n': self.n, 'm': self.m, 'tau': self.tau}
        )


def many_means_predictive(setup: ManyMeansSetup, q: float, stream: SeededStream, size: int) -> np.ndarray:
    """(size, n) matrix of xbar with mu from the exponential power prior of shape q."""
    mu = sample_exp_power(stream, setup.tau, q, size * setup.n).reshape(size, setup.n)
    return mu + stream.generator.standard_normal((size, setup.n)) / np.sqrt(setup.m)


def _statistic_fn(kind: LassoStatistic, tau: float, convention: ScoreConvention):
    return partial(lasso_statistic, LassoStatistic(kind), tau=tau, convention=ScoreConvention(convention))


def many_means_reference(statistic: LassoStatistic, setup: ManyMeansSetup, cfg: McConfig,
                         convention: ScoreConvention = ScoreConvention.DISPLAY) -> ReferenceDistribution:
    """Prior predictive distribution of a statistic at q = q0 (noise included)."""
    return simulate_reference(
        _statistic_fn(statistic, setup.tau, convention),
        partial(many_means_predictive, setup, setup.q0),
        cfg,
        vectorized=True
    )


def critical_values(statistic: LassoStatistic, setup: ManyMeansSetup, cfg: McConfig,
                    convention: ScoreConvention = ScoreConvention.TABULATED) -> Tuple[float, float]:
    """
    Equal-tailed critical values at level cfg.alpha under the q0 prior predictive.

    Returns:
        Tuple of (lower, upper); the default 0.05 gives the 2.5% and 97.5% quantiles
    """
    if cfg.n_draws < MIN_REFERENCE_DRAWS:
        raise DomainError(f"critical values need at least {MIN_REFERENCE_DRAWS} draws, got {cfg.n_draws}")
    reference = many_means_reference(statistic, setup, cfg, convention)
    lower, upper = reference.critical_values(cfg.alpha)
    logger.info("%s critical values (n=%d, m=%d): (%.4f, %.4f)",
                LassoStatistic(statistic).value, setup.n, setup.m, lower, upper)
    return lower, upper


def many_means_check(xbar, setup: ManyMeansSetup, cfg: McConfig,
                     statistic: LassoStatistic = LassoStatistic.SCORE,
                     convention: ScoreConvention = ScoreConvention.DISPLAY) -> CheckResult:
    """Two-sided check of the q0 prior for observed means xbar."""
    xbar = np.asarray(xbar, dtype=float)
    if xbar.shape != (setup.n,):
        raise DomainError(f"expected {setup.n} means, got shape {xbar.shape}")
    stat_fn = _statistic_fn(statistic, setup.tau, convention)
    reference = many_means_reference(statistic, setup, cfg, convention)
    return reference.check(
        float(stat_fn(xbar)), Tail.TWO_SIDED, cfg.base_seed,
        expansion=setup.expansion(), label=f"many_means_{LassoStatistic(statistic).value}"
    )


@dataclass
class ManyMeansPowerCheck:
    """Two-sided kurtosis and score p-values for xbar simulated at shape q."""
    setup: ManyMeansSetup
    cfg: McConfig
    convention: ScoreConvention = ScoreConvention.DISPLAY
    statistics: Tuple[LassoStatistic, ...] = (LassoStatistic.KURTOSIS, LassoStatistic.SCORE)
    references: Dict[LassoStatistic, ReferenceDistribution] = field(init=False, repr=False)

    def __post_init__(self):
        self.statistics = tuple(LassoStatistic(s) for s in self.statistics)
        self.references = {
            s: many_means_reference(s, self.setup, self.cfg, self.convention) for s in self.statistics
        }

    def evaluate(self, stream: SeededStream, gamma: float, size: int) -> Dict[str, np.ndarray]:
        if gamma <= 0:
            raise DomainError(f"q must be > 0, got {gamma}")
        xbar = many_means_predictive(self.setup, gamma, stream, size)
        return {
            s.value: self.references[s].p_value(
                lasso_statistic(s, xbar, self.setup.tau, self.convention), Tail.TWO_SIDED)
            for s in self.statistics
        }


def many_means_power_study(setup: ManyMeansSetup, q_grid: Sequence[float], n_reps: int,
                           cfg: McConfig) -> Dict[str, PowerCurve]:
    """Paired kurtosis and score power curves over q."""
    check = ManyMeansPowerCheck(setup, cfg)
    return power_curves(check, q_grid, n_reps, cfg, label=f"many_means_n{setup.n}")


def many_means_power(statistic: LassoStatistic, setup: ManyMeansSetup, q_grid: Sequence[float],
                     n_reps: int, cfg: McConfig) -> PowerCurve:
    statistic = LassoStatistic(statistic)
    check = ManyMeansPowerCheck(setup, cfg, statistics=(statistic,))
    return power_curves(check, q_grid, n_reps, cfg, label=f"many_means_n{setup.n}")[statistic.value]


# ---------------------------------------------------------------------------
# Regression
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RegressionSetup:
    """y = X beta + z with n rows, p predictors and an exponential power prior on beta."""
    n: int
    p: int
    tau: float = 1.0
    q0: float = 1.0
    standardize: bool = False

    def __post_init__(self):
        if self.n < 2:
            raise DomainError(f"n must be >= 2, got {self.n}")
        if self.p < 1:
            raise DomainError(f"p must be >= 1, got {self.p}")
        if self.tau <= 0 or self.q0 <= 0:
            raise DomainError("tau and q0 must be > 0")


def pseudo_inverse(X, rcond: float = PSEUDO_INVERSE_RCOND) -> np.ndarray:
    """
    Moore-Penrose pseudoinverse via SVD.

    Singular values below rcond * sigma_max are treated as zero.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DomainError(f"X must be a matrix, got shape {X.shape}")
    U, s, Vt = np.linalg.svd(X, full_matrices=False)
    if s.size == 0 or s[0] == 0:
        raise DomainError("X must be nonzero")
    keep = s > rcond * s[0]
    s_inv = np.zeros_like(s)
    s_inv[keep] = 1.0 / s[keep]
    return (Vt.T * s_inv) @ U.T


def regression_estimates(X, y) -> np.ndarray:
    """Minimum-norm least-squares estimate of beta."""
    return pseudo_inverse(X) @ np.asarray(y, dtype=float)


def standardize_columns(X) -> np.ndarray:
    """Center each column and scale it to unit length; constant columns become zero."""
    X = np.asarray(X, dtype=float)
    centered = X - X.mean(axis=0)
    norms = np.linalg.norm(centered, axis=0)
    return np.divide(centered, norms, out=np.zeros_like(centered), where=norms > 0)


def draw_design(setup: RegressionSetup, stream: SeededStream) -> np.ndarray:
    X = stream.generator.standard_normal((setup.n, setup.p))
    return standardize_columns(X) if setup.standardize else X


def regression_reference_estimates(setup: RegressionSetup, X: np.ndarray, X_pinv: np.ndarray,
                                   q: float, stream: SeededStream, size: int) -> np.ndarray:
    """(size, p) estimates for data simulated with beta at shape q and design X."""
    beta = sample_exp_power(stream, setup.tau, q, size * setup.p).reshape(size, setup.p)
    y = beta @ X.T + stream.generator.standard_normal((size, setup.n))
    return y @ X_pinv.T


@dataclass
class RegressionPowerCheck:
    """
    One replicate = fresh X, beta at shape q, y, estimates; both statistics
    are calibrated against q0 references simulated for that same X.
    """
    setup: RegressionSetup
    n_reference: int
    convention: ScoreConvention = ScoreConvention.DISPLAY

    def evaluate(self, stream: SeededStream, gamma: float, size: int) -> Dict[str, np.ndarray]:
        if gamma <= 0:
            raise DomainError(f"q must be > 0, got {gamma}")
        p_values = {s.value: np.empty(size) for s in LassoStatistic}
        for r in range(size):
            X = draw_design(self.setup, stream)
            X_pinv = pseudo_inverse(X)
            estimate = regression_reference_estimates(self.setup, X, X_pinv, gamma, stream, 1)
            reference = regression_reference_estimates(
                self.setup, X, X_pinv, self.setup.q0, stream, self.n_reference)
            for s in LassoStatistic:
                ref = ReferenceDistribution(lasso_statistic(s, reference, self.setup.tau, self.convention))
                obs = lasso_statistic(s, estimate, self.setup.tau, self.convention)
                p_values[s.value][r] = ref.p_value(obs[0], Tail.TWO_SIDED)
        return p_values


def regression_power_study(setup: RegressionSetup, q_grid: Sequence[float], n_reps: int,
                           cfg: McConfig, n_reference: Optional[int] = None) -> Dict[str, PowerCurve]:
    """
    Kurtosis and score power curves for one (n, p).

    Each replicate gets its own reference of n_reference draws (default
    cfg.n_draws) conditional on its design matrix.
    """
    check = RegressionPowerCheck(setup, n_reference or cfg.n_draws)
    return power_curves(check, q_grid, n_reps, cfg, label=f"regression_n{setup.n}_p{setup.p}")
