"""
Closed-form conflict checks for conjugate models.

Three models, each with an analytic statistic and a Monte Carlo check
built on the generic engine so the two can be cross-validated:

  NormalLocationModel  y ~ N(theta, sigma^2), theta ~ N(mu0, tau0^2),
                       expanded in the prior variance tau^2.
  BinomialBetaModel    y ~ Bin(n, theta), theta ~ Beta(a, b), expanded as a
                       geometric mixture with the Jeffreys or uniform prior
                       (gamma = 1 is the analysis prior).
  NigModel             y_i ~ N(mu, sigma^2), mu | sigma^2 ~ N(mu0, sigma^2 / lambda0),
                       sigma^2 ~ IG(a, b); the conditional prior of mu is checked.
"""

from dataclasses import dataclass
from enum import Enum
from functools import partial
from typing import Tuple

import numpy as np
from scipy import stats

from ..checking.conflict_core import HierarchicalSampler, hierarchical_check, mc_p_value
from ..data.models import CheckResult, McConfig, PriorExpansionSpec, Tail
from ..errors import DomainError
from ..numerics.rng_dist import SeededStream, sample_inverse_gamma
from ..numerics.special_fn import digamma, log_beta, std_normal_cdf

TIE_TOLERANCE = 1e-12


def _require_positive(**values):
    for name, value in values.items():
        if not np.isfinite(value) or value <= 0:
            raise DomainError(f"{name} must be finite and > 0, got {value}")


# ---------------------------------------------------------------------------
# Normal location, expanded in the prior variance
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NormalLocationModel:
    """Normal prior N(mu0, tau0_sq) on a normal mean with known variance sigma_sq."""
    mu0: float
    tau0_sq: float
    sigma_sq: float

    def __post_init__(self):
        _require_positive(tau0_sq=self.tau0_sq, sigma_sq=self.sigma_sq)

    @property
    def predictive_variance(self) -> float:
        return self.sigma_sq + self.tau0_sq

    def for_sample_mean(self, n: int) -> 'NormalLocationModel':
        """Model for the mean of n observations (the sufficient statistic)."""
        if n < 1:
            raise DomainError(f"n must be >= 1, got {n}")
        return NormalLocationModel(self.mu0, self.tau0_sq, self.sigma_sq / n)

    def expansion(self) -> PriorExpansionSpec:
        return PriorExpansionSpec(
            family="normal_variance",
            gamma0=self.tau0_sq,
            hyperparameters={'mu0': self.mu0, 'sigma_sq': self.sigma_sq}
        )


def reduce_to_mean(model: NormalLocationModel, y) -> Tuple[NormalLocationModel, float]:
    """Collapse a sample to its mean and the matching model."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if y.size == 0:
        raise DomainError("no observations given")
    return model.for_sample_mean(y.size), float(np.mean(y))


def normal_log_marginal(model: NormalLocationModel, y, tau_sq: float = None):
    """log p(y | tau^2) with y ~ N(mu0, sigma^2 + tau^2)."""
    tau_sq = model.tau0_sq if tau_sq is None else tau_sq
    _require_positive(tau_sq=tau_sq)
    return stats.norm.logpdf(y, loc=model.mu0, scale=np.sqrt(model.sigma_sq + tau_sq))


def normal_score(model: NormalLocationModel, y):
    """d/dtau^2 log p(y | tau^2) at tau0^2; increasing in (y - mu0)^2."""
    v = model.predictive_variance
    d = np.asarray(y, dtype=float) - model.mu0
    score = d * d / (2.0 * v * v) - 1.0 / (2.0 * v)
    return float(score) if score.ndim == 0 else score


def normal_score_posterior(model: NormalLocationModel, y) -> float:
    """
    Same score as E[d/dtau^2 log g(theta | tau^2) | y], from the conjugate
    posterior N(m, s): E[-1/(2 tau^2) + (theta - mu0)^2 / (2 tau^4)].
    """
    tau_sq = model.tau0_sq
    s = 1.0 / (1.0 / model.sigma_sq + 1.0 / tau_sq)
    m = s * (np.asarray(y, dtype=float) / model.sigma_sq + model.mu0 / tau_sq)
    score = -0.5 / tau_sq + (s + (m - model.mu0) ** 2) / (2.0 * tau_sq * tau_sq)
    return float(score) if np.ndim(score) == 0 else score


def normal_p_value(model: NormalLocationModel, y_obs: float) -> float:
    """2 (1 - Phi(|y - mu0| / sqrt(sigma^2 + tau0^2)))."""
    z = abs(float(y_obs) - model.mu0) / np.sqrt(model.predictive_variance)
    return min(1.0, 2.0 * std_normal_cdf(-z))


def _squared_deviation(center: float, y):
    d = np.asarray(y, dtype=float) - center
    return d * d


def _normal_predictive(model: NormalLocationModel, stream: SeededStream, size: int) -> np.ndarray:
    gen = stream.generator
    theta = model.mu0 + np.sqrt(model.tau0_sq) * gen.standard_normal(size)
    return theta + np.sqrt(model.sigma_sq) * gen.standard_normal(size)


def normal_check(model: NormalLocationModel, y_obs, cfg: McConfig) -> CheckResult:
    """Monte Carlo check on (y - mu0)^2, upper tail. Vector data is reduced to its mean."""
    if np.ndim(y_obs) > 0:
        model, y_obs = reduce_to_mean(model, y_obs)
    return mc_p_value(
        partial(_squared_deviation, model.mu0),
        float(y_obs),
        partial(_normal_predictive, model),
        cfg.replace(tail=Tail.UPPER),
        vectorized=True,
        expansion=model.expansion(),
        label="normal"
    )


# ---------------------------------------------------------------------------
# Binomial with beta prior, geometric mixture expansion
# ---------------------------------------------------------------------------

class MixtureTarget(str, Enum):
    """Prior the analysis prior is geometrically mixed with."""
    JEFFREYS = "jeffreys"
    UNIFORM = "uniform"

    @property
    def exponent(self) -> float:
        """Beta parameter of the target prior."""
        return 0.5 if self is MixtureTarget.JEFFREYS else 1.0


@dataclass(frozen=True)
class BinomialBetaModel:
    """Beta(a, b) prior on a binomial proportion with n trials."""
    n: int
    a: float
    b: float
    mixture_target: MixtureTarget = MixtureTarget.JEFFREYS

    def __post_init__(self):
        object.__setattr__(self, 'mixture_target', MixtureTarget(self.mixture_target))
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n must be a positive integer, got {self.n}")
        _require_positive(a=self.a, b=self.b)

    @property
    def coefficients(self) -> Tuple[float, float]:
        """d/dgamma of the mixed beta parameters: (a - t, b - t)."""
        t = self.mixture_target.exponent
        return self.a - t, self.b - t

    def mixed_parameters(self, gamma: float) -> Tuple[float, float]:
        """Beta parameters of g(theta)^gamma q(theta)^(1 - gamma), normalized."""
        t = self.mixture_target.exponent
        a_g = t + gamma * (self.a - t)
        b_g = t + gamma * (self.b - t)
        if a_g <= 0 or b_g <= 0:
            raise DomainError(f"gamma={gamma} gives an improper mixed prior")
        return a_g, b_g

    def check_count(self, y):
        y = np.asarray(y)
        if np.any(y < 0) or np.any(y > self.n) or np.any(np.floor(y) != y):
            raise DomainError(f"counts must be integers in [0, {self.n}], got {y!r}")
        return y.astype(float)

    def expansion(self) -> PriorExpansionSpec:
        return PriorExpansionSpec(
            family=f"beta_{self.mixture_target.value}_geometric_mix",
            gamma0=1.0,
            hyperparameters={'n': self.n, 'a': self.a, 'b': self.b}
        )


def binomial_log_marginal(model: BinomialBetaModel, y, gamma: float = 1.0):
    """log of the beta-binomial marginal under the mixed prior, via log-beta differences."""
    y = model.check_count(y)
    a_g, b_g = model.mixed_parameters(gamma)
    n = model.n
    log_choose = -np.log(n + 1.0) - log_beta(n - y + 1.0, y + 1.0)
    return log_choose + log_beta(y + a_g, n - y + b_g) - log_beta(a_g, b_g)


def binomial_score_exact(model: BinomialBetaModel, y, full: bool = True):
    """
    d/dgamma log p(y | gamma) at gamma = 1.

    With (ca, cb) = model.coefficients:
        ca (psi(y+a) - psi(a)) + cb (psi(n-y+b) - psi(b)) - (ca+cb) (psi(n+a+b) - psi(a+b))

    full=False drops the terms that do not depend on y.
    """
    y = model.check_count(y)
    a, b, n = model.a, model.b, model.n
    ca, cb = model.coefficients
    score = ca * digamma(y + a) + cb * digamma(n - y + b) - (ca + cb) * digamma(n + a + b)
    if full:
        score = score - ca * digamma(a) - cb * digamma(b) + (ca + cb) * digamma(a + b)
    return float(score) if np.ndim(score) == 0 else np.asarray(score)


def binomial_score_asymptotic(model: BinomialBetaModel, y):
    """ca log t + cb log(1 - t) with t = (y + a) / (n + a + b); matches full=False to O(1/n)."""
    y = model.check_count(y)
    ca, cb = model.coefficients
    t = (y + model.a) / (model.n + model.a + model.b)
    score = ca * np.log(t) + cb * np.log1p(-t)
    return float(score) if np.ndim(score) == 0 else score


def binomial_p_value_exact(model: BinomialBetaModel, y_obs: int, tail: Tail = Tail.LOWER) -> float:
    """Exact prior predictive p-value of the score, enumerating y = 0..n."""
    ys = np.arange(model.n + 1)
    pmf = stats.betabinom.pmf(ys, model.n, model.a, model.b)
    scores = binomial_score_exact(model, ys)
    obs = binomial_score_exact(model, y_obs)
    tol = TIE_TOLERANCE * max(1.0, abs(obs))
    p_upper = float(np.sum(pmf[scores >= obs - tol]))
    p_lower = float(np.sum(pmf[scores <= obs + tol]))
    tail = Tail(tail)
    if tail is Tail.UPPER:
        return min(1.0, p_upper)
    if tail is Tail.LOWER:
        return min(1.0, p_lower)
    return min(1.0, 2.0 * min(p_upper, p_lower))


def _binomial_predictive(model: BinomialBetaModel, stream: SeededStream, size: int) -> np.ndarray:
    gen = stream.generator
    theta = gen.beta(model.a, model.b, size=size)
    return gen.binomial(model.n, theta)


def binomial_check(model: BinomialBetaModel, y_obs: int, cfg: McConfig,
                   tail: Tail = Tail.LOWER) -> CheckResult:
    """Monte Carlo check on the exact score. Small scores favour the mixture target."""
    model.check_count(y_obs)
    return mc_p_value(
        partial(binomial_score_exact, model),
        int(y_obs),
        partial(_binomial_predictive, model),
        cfg.replace(tail=tail),
        vectorized=True,
        expansion=model.expansion(),
        label=f"binomial_{model.mixture_target.value}"
    )


# ---------------------------------------------------------------------------
# Normal-inverse-gamma, hierarchical check of mu | sigma^2
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NigModel:
    """Conjugate normal-inverse-gamma prior for n normal observations."""
    mu0: float
    lambda0: float
    a: float
    b: float
    n: int

    def __post_init__(self):
        _require_positive(lambda0=self.lambda0, a=self.a, b=self.b)
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n must be a positive integer, got {self.n}")

    def check_data(self, y) -> np.ndarray:
        y = np.atleast_1d(np.asarray(y, dtype=float))
        if y.size == 0:
            raise DomainError("no observations given")
        if y.shape[-1] != self.n:
            raise DomainError(f"expected {self.n} observations, got {y.shape[-1]}")
        return y


@dataclass(frozen=True)
class NigPosterior:
    """NIG(mu_n, lambda_n, a_n, b_n) posterior parameters."""
    mu_n: float
    lambda_n: float
    a_n: float
    b_n: float

    @property
    def mean_precision(self) -> float:
        """E[1 / sigma^2 | y] = a_n / b_n."""
        return self.a_n / self.b_n


def nig_posterior(model: NigModel, y) -> NigPosterior:
    """
    Conjugate update:
        lambda_n = lambda0 + n
        mu_n = (lambda0 mu0 + n ybar) / lambda_n
        a_n = a + n / 2
        b_n = b + (sum (y - ybar)^2 + lambda0 n (ybar - mu0)^2 / lambda_n) / 2
    """
    y = model.check_data(y)
    n = y.size
    ybar = float(np.mean(y))
    lambda_n = model.lambda0 + n
    ss = float(np.sum((y - ybar) ** 2))
    return NigPosterior(
        mu_n=(model.lambda0 * model.mu0 + n * ybar) / lambda_n,
        lambda_n=lambda_n,
        a_n=model.a + 0.5 * n,
        b_n=model.b + 0.5 * (ss + model.lambda0 * n * (ybar - model.mu0) ** 2 / lambda_n)
    )


def nig_s1_statistic(model: NigModel, y):
    """(ybar - mu0)^2; accepts one dataset or a batch with datasets along the last axis."""
    y = model.check_data(y)
    d = np.mean(y, axis=-1) - model.mu0
    stat = d * d
    return float(stat) if np.ndim(stat) == 0 else stat


def nig_conditional_score(model: NigModel, y, sigma_sq):
    """
    d/dlambda log p(y | sigma^2, lambda) at lambda0:
        n / (2 lambda (lambda + n)) - n^2 (ybar - mu0)^2 / (2 sigma^2 (lambda + n)^2)
    """
    y = model.check_data(y)
    n = model.n
    lam = model.lambda0
    d2 = (np.mean(y) - model.mu0) ** 2
    sigma_sq = np.asarray(sigma_sq, dtype=float)
    score = n / (2.0 * lam * (lam + n)) - n * n * d2 / (2.0 * sigma_sq * (lam + n) ** 2)
    return float(score) if score.ndim == 0 else score


def nig_s1_exact(model: NigModel, y, y_obs) -> float:
    """Conditional score averaged over sigma^2 | y_obs, in closed form (decreasing in (ybar - mu0)^2)."""
    precision = nig_posterior(model, y_obs).mean_precision
    return nig_conditional_score(model, y, 1.0 / precision)


def _sigma_sq_posterior(post: NigPosterior, stream: SeededStream, size: int) -> np.ndarray:
    return sample_inverse_gamma(stream, post.a_n, post.b_n, size)


def _mu_given_sigma_sq(model: NigModel, stream: SeededStream, sigma_sq: np.ndarray) -> np.ndarray:
    return model.mu0 + np.sqrt(sigma_sq / model.lambda0) * stream.generator.standard_normal(sigma_sq.shape)


def _nig_likelihood(model: NigModel, stream: SeededStream, sigma_sq: np.ndarray, mu: np.ndarray) -> np.ndarray:
    noise = stream.generator.standard_normal((mu.size, model.n))
    return mu[:, np.newaxis] + np.sqrt(sigma_sq)[:, np.newaxis] * noise


def nig_reference_sampler(model: NigModel, y_obs) -> HierarchicalSampler:
    """sigma^2 from its posterior given y_obs, mu from the conditional prior, then y."""
    post = nig_posterior(model, y_obs)
    return HierarchicalSampler(
        partial(_sigma_sq_posterior, post),
        partial(_mu_given_sigma_sq, model),
        partial(_nig_likelihood, model)
    )


def _nig_expansion(model: NigModel, family: str, gamma0: float) -> PriorExpansionSpec:
    return PriorExpansionSpec(
        family=family,
        gamma0=gamma0,
        hyperparameters={'mu0': model.mu0, 'lambda0': model.lambda0, 'a': model.a, 'b': model.b, 'n': model.n}
    )


def nig_s1_check(model: NigModel, y_obs, cfg: McConfig) -> CheckResult:
    """Check of mu | sigma^2 via (ybar - mu0)^2, upper tail."""
    y_obs = model.check_data(y_obs)
    return mc_p_value(
        partial(nig_s1_statistic, model),
        y_obs,
        nig_reference_sampler(model, y_obs),
        cfg.replace(tail=Tail.UPPER),
        vectorized=True,
        expansion=_nig_expansion(model, "nig_lambda", model.lambda0),
        label="nig_s1"
    )


def _nig_score_over_draws(model: NigModel, y, sigma_sq_draws):
    return nig_conditional_score(model, y, sigma_sq_draws)


def nig_s1_engine_check(model: NigModel, y_obs, cfg: McConfig, n_posterior: int = 1000) -> CheckResult:
    """
    Same check through hierarchical_check with the exact conditional score.

    Small scores mean the data want a smaller lambda (a wider conditional
    prior), so the lower tail signals conflict.
    """
    y_obs = model.check_data(y_obs)
    post = nig_posterior(model, y_obs)
    return hierarchical_check(
        partial(_nig_score_over_draws, model),
        partial(_sigma_sq_posterior, post),
        partial(_mu_given_sigma_sq, model),
        partial(_nig_likelihood, model),
        y_obs,
        cfg.replace(tail=Tail.LOWER),
        n_posterior=n_posterior,
        expansion=_nig_expansion(model, "nig_lambda", model.lambda0),
        label="nig_s1_engine"
    )


def _nig_mean_shift_statistic(model: NigModel, y):
    return np.mean(model.check_data(y), axis=-1) - model.mu0


def nig_mean_shift_check(model: NigModel, y_obs, cfg: McConfig) -> CheckResult:
    """
    Expansion in the conditional prior mean mu'. Its score is proportional
    to ybar - mu0, so the check is two-sided on that difference.
    """
    y_obs = model.check_data(y_obs)
    return mc_p_value(
        partial(_nig_mean_shift_statistic, model),
        y_obs,
        nig_reference_sampler(model, y_obs),
        cfg.replace(tail=Tail.TWO_SIDED),
        vectorized=True,
        expansion=_nig_expansion(model, "nig_mean_shift", model.mu0),
        label="nig_mean_shift"
    )
