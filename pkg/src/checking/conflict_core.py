"""
Generic prior-data conflict check engine.

A check evaluates a statistic on the observed data, simulates the same
statistic on replicate data from a prior predictive sampler, and reports
where the observed value falls (see calibration.ReferenceDistribution).

Samplers are called as `sampler(stream, size)` and return a batch whose
first axis indexes the `size` replicate datasets. Statistics are called
per dataset, or once per batch when `vectorized=True`.
"""

import logging
from dataclasses import dataclass
from functools import partial
from typing import Any, Callable, Dict, Mapping, Optional, Protocol, Sequence, Tuple

import numpy as np

from ..data.models import CheckResult, McConfig, PowerCurve, PriorExpansionSpec
from ..errors import DomainError, NumericalError
from ..numerics.rng_dist import SeededStream
from .calibration import ReferenceDistribution
from .mc_runner import Chunk, MonteCarloRunner, plan_chunks

logger = logging.getLogger(__name__)

NONFINITE_TOLERANCE = 0.001     # Fraction of non-finite statistics tolerated
POWER_CHUNK_SIZE = 25           # Replicates per stream in power studies

# Stream namespaces under the base seed
REFERENCE_PATH = (0,)
POWER_PATH = (1,)
POSTERIOR_PATH = (2,)

Sampler = Callable[[SeededStream, int], Any]


@dataclass(frozen=True)
class _ReferenceTask:
    """Simulates the statistic on one chunk of replicates."""
    statistic: Callable
    sampler: Sampler
    vectorized: bool

    def __call__(self, chunk: Chunk) -> np.ndarray:
        batch = self.sampler(chunk.stream, chunk.size)
        if self.vectorized:
            values = np.asarray(self.statistic(batch), dtype=float).ravel()
        else:
            values = np.fromiter((self.statistic(data) for data in batch), dtype=float, count=chunk.size)
        if values.size != chunk.size:
            raise DomainError(f"statistic returned {values.size} values for {chunk.size} replicates")
        return values


def evaluate_statistic(statistic: Callable, data: Any, vectorized: bool = False) -> float:
    """Statistic of a single dataset; vectorized statistics receive a batch of one."""
    if vectorized:
        value = np.asarray(statistic(np.asarray(data)[np.newaxis, ...]), dtype=float).ravel()[0]
    else:
        value = statistic(data)
    value = float(value)
    if not np.isfinite(value):
        raise DomainError(f"statistic is not finite on the observed data: {value}")
    return value


def simulate_reference(statistic: Callable, predictive_sampler: Sampler, cfg: McConfig,
                       vectorized: bool = False, path: Tuple[int, ...] = REFERENCE_PATH,
                       runner: Optional[MonteCarloRunner] = None) -> ReferenceDistribution:
    """
    Simulate the reference distribution of a statistic.

    Args:
        statistic: Data -> real (or batch -> array when vectorized)
        predictive_sampler: (stream, size) -> batch of replicate datasets
        cfg: Monte Carlo settings (draw count, workers, seed, chunk size)
        vectorized: Statistic takes the whole batch
        path: Stream namespace, keeps independent simulations apart
        runner: Optional runner with callbacks attached

    Returns:
        ReferenceDistribution of the finite simulated statistics

    Raises:
        NumericalError: more than 0.1% of simulated statistics are non-finite
    """
    runner = runner or MonteCarloRunner(cfg)
    chunks = plan_chunks(cfg.n_draws, cfg.chunk_size, cfg.base_seed, path)
    task = _ReferenceTask(statistic, predictive_sampler, vectorized)
    results = runner.run(chunks, task)

    values = np.concatenate(results)
    finite = np.isfinite(values)
    n_bad = int(values.size - np.count_nonzero(finite))
    if n_bad:
        offenders = [c.stream.describe() for c, r in zip(chunks, results) if not np.all(np.isfinite(r))]
        if n_bad > NONFINITE_TOLERANCE * values.size:
            raise NumericalError(
                f"{n_bad} of {values.size} simulated statistics are non-finite; "
                f"first offending stream: {offenders[0]}"
            )
        logger.warning("Dropping %d non-finite statistics (streams: %s)", n_bad, ", ".join(offenders))
    return ReferenceDistribution(values[finite], n_dropped=n_bad)


def mc_p_value(statistic: Callable, obs_data: Any, predictive_sampler: Sampler, cfg: McConfig,
               vectorized: bool = False, expansion: Optional[PriorExpansionSpec] = None,
               label: str = "", runner: Optional[MonteCarloRunner] = None) -> CheckResult:
    """
    Prior predictive p-value of a statistic.

    The tail comes from cfg.tail. The result is identical for any
    n_workers given the same cfg.base_seed.
    """
    statistic_obs = evaluate_statistic(statistic, obs_data, vectorized)
    reference = simulate_reference(statistic, predictive_sampler, cfg, vectorized, runner=runner)
    return reference.check(statistic_obs, cfg.tail, cfg.base_seed, expansion, label)


def mixture_score(log_density_ratio: Callable, posterior_draws: Any, vectorized: bool = True) -> float:
    """
    Score of the arithmetic mixture expansion (1 - gamma) g + gamma q at gamma = 0.

    Estimates E[q(theta) / g(theta) | y] - 1 from posterior draws under g.

    Args:
        log_density_ratio: theta -> log q(theta) - log g(theta)
        posterior_draws: Draws from g(theta | y), first axis indexes draws
        vectorized: log_density_ratio accepts the whole array of draws

    Raises:
        DomainError: the ratio is not finite on some draw (q and g supports differ)
    """
    if vectorized:
        log_ratio = np.asarray(log_density_ratio(posterior_draws), dtype=float)
    else:
        log_ratio = np.array([log_density_ratio(theta) for theta in posterior_draws], dtype=float)
    if log_ratio.size == 0:
        raise DomainError("mixture_score needs posterior draws")
    ratio = np.exp(log_ratio)
    if not np.all(np.isfinite(ratio)):
        raise DomainError("density ratio q/g is not finite on the posterior support")
    return float(np.mean(ratio) - 1.0)


def posterior_expected_score(log_prior_derivative: Callable, posterior_draws: Any) -> Tuple[float, float]:
    """
    Score as the posterior mean of d/dgamma log g(theta | gamma).

    Returns:
        Tuple of (estimate, Monte Carlo standard error)
    """
    values = np.asarray(log_prior_derivative(posterior_draws), dtype=float)
    if values.size < 2:
        raise DomainError("need at least two posterior draws")
    if not np.all(np.isfinite(values)):
        raise DomainError("log-prior derivative is not finite on the posterior draws")
    return float(np.mean(values)), float(np.std(values, ddof=1) / np.sqrt(values.size))


class PowerCheck(Protocol):
    """
    A check that can be run on replicate data simulated under gamma.

    evaluate returns one array of `size` p-values per statistic name.
    Implementations hold their reference distributions, so they are
    simulated once per study.
    """

    def evaluate(self, stream: SeededStream, gamma: float, size: int) -> Mapping[str, np.ndarray]:
        ...


def _evaluate_power_chunk(check: PowerCheck, gamma_grid: Sequence[float], chunk: Chunk) -> Dict[str, np.ndarray]:
    gamma = gamma_grid[chunk.group]
    try:
        result = check.evaluate(chunk.stream, gamma, chunk.size)
    except Exception as e:
        raise NumericalError(
            f"power study failed at gamma={gamma}, replicates "
            f"{chunk.start}..{chunk.start + chunk.size - 1}: {e}"
        ) from e
    return {name: np.asarray(p, dtype=float) for name, p in result.items()}


def power_curves(check: PowerCheck, gamma_grid: Sequence[float], n_reps: int, cfg: McConfig,
                 label: str = "", runner: Optional[MonteCarloRunner] = None) -> Dict[str, PowerCurve]:
    """
    Rejection rates at level cfg.alpha for every statistic a check reports.

    All statistics see the same replicate datasets, so curves are paired.

    Returns:
        Mapping from statistic name to PowerCurve
    """
    if n_reps < 1:
        raise DomainError(f"n_reps must be >= 1, got {n_reps}")
    gamma_grid = [float(g) for g in gamma_grid]
    chunks = []
    for i, _ in enumerate(gamma_grid):
        chunks.extend(plan_chunks(n_reps, POWER_CHUNK_SIZE, cfg.base_seed, POWER_PATH + (i,), group=i))

    runner = runner or MonteCarloRunner(cfg)
    results = runner.run(chunks, partial(_evaluate_power_chunk, check, gamma_grid))

    rejections: Dict[str, np.ndarray] = {}
    for chunk, result in zip(chunks, results):
        for name, p in result.items():
            counts = rejections.setdefault(name, np.zeros(len(gamma_grid)))
            counts[chunk.group] += np.count_nonzero(p <= cfg.alpha)

    curves = {}
    for name, counts in rejections.items():
        curves[name] = PowerCurve(
            gamma_grid=gamma_grid,
            power=list(counts / n_reps),
            n_reps=n_reps,
            alpha=cfg.alpha,
            seed=cfg.base_seed,
            label=f"{label}:{name}" if label else name
        )
    return curves


def power_curve(check: PowerCheck, gamma_grid: Sequence[float], n_reps: int, cfg: McConfig,
                statistic: Optional[str] = None, label: str = "") -> PowerCurve:
    """Single-statistic form of power_curves."""
    curves = power_curves(check, gamma_grid, n_reps, cfg, label)
    if statistic is None:
        if len(curves) != 1:
            raise DomainError(f"check reports {sorted(curves)}; name the statistic")
        return next(iter(curves.values()))
    if statistic not in curves:
        raise DomainError(f"unknown statistic {statistic!r}; available: {sorted(curves)}")
    return curves[statistic]


@dataclass(frozen=True)
class HierarchicalSampler:
    """Replicates from theta1 | y_obs, then theta2 | theta1, then y | theta."""
    theta1_posterior_sampler: Sampler
    cond_prior_sampler: Callable
    likelihood_sampler: Callable

    def __call__(self, stream: SeededStream, size: int):
        theta1 = self.theta1_posterior_sampler(stream, size)
        theta2 = self.cond_prior_sampler(stream, theta1)
        return self.likelihood_sampler(stream, theta1, theta2)


@dataclass(frozen=True)
class _AveragedScore:
    """Conditional score averaged over fixed posterior draws of theta1."""
    cond_score: Callable
    theta1_draws: Any

    def __call__(self, data) -> float:
        return float(np.mean(self.cond_score(data, self.theta1_draws)))


def hierarchical_check(cond_score: Callable, theta1_posterior_sampler: Sampler,
                       cond_prior_sampler: Callable, likelihood_sampler: Callable,
                       obs_data: Any, cfg: McConfig, n_posterior: int = 1000,
                       expansion: Optional[PriorExpansionSpec] = None, label: str = "",
                       runner: Optional[MonteCarloRunner] = None) -> CheckResult:
    """
    Check of the conditional prior g(theta2 | theta1) in a hierarchical model.

    The statistic averages cond_score(data, theta1_draws) over a fixed set of
    n_posterior draws from theta1 | y_obs. Reference replicates draw theta1
    from the same posterior, theta2 from the conditional prior and y from
    the likelihood.

    Args:
        cond_score: (data, theta1 array) -> array of conditional scores
        theta1_posterior_sampler: (stream, size) -> theta1 draws given y_obs
        cond_prior_sampler: (stream, theta1) -> theta2 draws
        likelihood_sampler: (stream, theta1, theta2) -> batch of datasets
        obs_data: Observed data
        cfg: Monte Carlo settings; cfg.tail picks the conflict direction
        n_posterior: Posterior draws used to average the statistic
    """
    if n_posterior < 1:
        raise DomainError(f"n_posterior must be >= 1, got {n_posterior}")
    posterior_stream = SeededStream(cfg.base_seed, 0, POSTERIOR_PATH)
    theta1_draws = theta1_posterior_sampler(posterior_stream, n_posterior)
    statistic = _AveragedScore(cond_score, theta1_draws)
    sampler = HierarchicalSampler(theta1_posterior_sampler, cond_prior_sampler, likelihood_sampler)
    return mc_p_value(statistic, obs_data, sampler, cfg, expansion=expansion, label=label, runner=runner)
