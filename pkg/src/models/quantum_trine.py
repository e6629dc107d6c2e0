"""
Conflict checks for multinomial data from a symmetrically distorted trine
measurement on a qubit.

Only probability vectors reachable from a physical state are allowed. For
distortion angle gamma they form Theta_gamma, the image of the unit disk
under the affine map

    theta1 = sin(g)^2 (1 + s1) / 2
    theta2 = (1 + cos(g)^2 - s1 sin(g)^2 + 2 s2 cos(g)) / 4
    theta3 = (1 + cos(g)^2 - s1 sin(g)^2 - 2 s2 cos(g)) / 4

Priors are Dirichlet densities truncated to Theta_gamma. Three expansions
are checked: g1 (geometric mixture with the Jeffreys prior), g2 (shift of
the prior mean toward theta1) and the physical expansion in the angle
gamma itself, which moves the support.

Posterior expectations default to disk quadrature: the integrands are
polynomials in (s1, s2), so a fixed Gauss grid is accurate and
deterministic. Rejection-sampled Monte Carlo is kept as a cross-check.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache, partial
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp, softmax

from ..checking.calibration import ReferenceDistribution
from ..checking.conflict_core import POSTERIOR_PATH, power_curves, simulate_reference
from ..data.models import CheckResult, McConfig, PowerCurve, PriorExpansionSpec, Tail
from ..errors import DomainError, NumericalError
from ..numerics.quadrature import DiskQuadrature
from ..numerics.rng_dist import SeededStream, sample_dirichlet, sample_multinomial
from ..numerics.special_fn import digamma

logger = logging.getLogger(__name__)

K = 3
DISK_TOLERANCE = 1e-12
MIN_ACCEPTANCE = 1e-4           # Hard floor, checked after PILOT_DRAWS proposals
LOW_ACCEPTANCE = 0.01           # Logged as a warning
PILOT_DRAWS = 100_000
FD_STEP = 1e-3                  # Central difference step in gamma (radians)
QUADRATURE_BATCH = 256          # Count vectors per quadrature block
DEFAULT_GRID = DiskQuadrature()
EXPERIMENT_COUNTS = (180, 31, 30)
EXPERIMENT_COS_SQ = 0.1327


# ---------------------------------------------------------------------------
# Geometry
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TrineGeometry:
    """Symmetrically distorted trine with distortion angle gamma (radians)."""
    gamma: float

    def __post_init__(self):
        c2 = self.cos_sq
        if not (0.0 < c2 < 1.0) or not np.isfinite(self.gamma):
            raise DomainError(f"cos^2(gamma) must lie in (0, 1), got gamma={self.gamma}")

    @classmethod
    def ideal(cls) -> 'TrineGeometry':
        """Undistorted trine, cos^2(gamma) = 1/3."""
        return cls(float(np.arccos(np.sqrt(1.0 / 3.0))))

    @classmethod
    def from_cos_sq(cls, cos_sq: float) -> 'TrineGeometry':
        if not 0.0 < cos_sq < 1.0:
            raise DomainError(f"cos^2(gamma) must lie in (0, 1), got {cos_sq}")
        return cls(float(np.arccos(np.sqrt(cos_sq))))

    @property
    def cos(self) -> float:
        return float(np.cos(self.gamma))

    @property
    def cos_sq(self) -> float:
        return float(np.cos(self.gamma) ** 2)

    @property
    def sin_sq(self) -> float:
        return float(np.sin(self.gamma) ** 2)

    @property
    def log_jacobian(self) -> float:
        """log |d(theta1, theta2) / d(s1, s2)| = log(sin^2 cos / 4)."""
        return float(np.log(self.sin_sq * self.cos / 4.0))

    def shifted(self, h: float) -> 'TrineGeometry':
        return TrineGeometry(self.gamma + h)

    def theta(self, s1, s2) -> np.ndarray:
        """Map disk coordinates to probabilities, unchecked; last axis has length 3."""
        s1 = np.asarray(s1, dtype=float)
        s2 = np.asarray(s2, dtype=float)
        sin_sq, cos_sq, cos = self.sin_sq, self.cos_sq, self.cos
        theta1 = 0.5 * sin_sq * (1.0 + s1)
        base = 0.25 * (1.0 + cos_sq - s1 * sin_sq)
        spread = 0.5 * s2 * cos
        return np.stack(np.broadcast_arrays(theta1, base + spread, base - spread), axis=-1)

    def disk_from_theta(self, theta) -> Tuple[np.ndarray, np.ndarray]:
        """Inverse map: s1 = 2 theta1 / sin^2 - 1, s2 = (theta2 - theta3) / cos."""
        theta = np.asarray(theta, dtype=float)
        s1 = 2.0 * theta[..., 0] / self.sin_sq - 1.0
        s2 = (theta[..., 1] - theta[..., 2]) / self.cos
        return s1, s2

    def simplex_vertices_disk(self) -> np.ndarray:
        """Disk coordinates of the simplex corners; the disk is inscribed in their triangle."""
        return np.array([
            [2.0 / self.sin_sq - 1.0, 0.0],
            [-1.0, 1.0 / self.cos],
            [-1.0, -1.0 / self.cos],
        ])


def theta_from_disk(geom: TrineGeometry, s1, s2) -> np.ndarray:
    """Probabilities of the three outcomes for a state with disk coordinates (s1, s2)."""
    radius_sq = np.asarray(s1, dtype=float) ** 2 + np.asarray(s2, dtype=float) ** 2
    if np.any(radius_sq > 1.0 + DISK_TOLERANCE):
        raise DomainError("point lies outside the unit disk")
    return geom.theta(s1, s2)


def constraint_satisfied(geom: TrineGeometry, theta):
    """True where theta lies in Theta_gamma."""
    s1, s2 = geom.disk_from_theta(theta)
    inside = s1 * s1 + s2 * s2 <= 1.0 + DISK_TOLERANCE
    return bool(inside) if np.ndim(inside) == 0 else inside


def ideal_trine_constraint(theta):
    """Symmetric form for the ideal trine: sum theta_k^2 <= 1/2."""
    theta = np.asarray(theta, dtype=float)
    return np.sum(theta * theta, axis=-1) <= 0.5 + DISK_TOLERANCE


# ---------------------------------------------------------------------------
# Constrained Dirichlet
# ---------------------------------------------------------------------------

def _check_alpha(alpha) -> np.ndarray:
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != (K,) or np.any(~np.isfinite(alpha)) or np.any(alpha <= 0):
        raise DomainError(f"alpha must be {K} positive reals, got {alpha!r}")
    return alpha


def _check_counts(y) -> np.ndarray:
    y = np.asarray(y)
    if y.shape[-1] != K or np.any(y < 0) or np.any(np.floor(y) != y):
        raise DomainError(f"counts must be non-negative integer {K}-vectors, got {y!r}")
    return y.astype(float)


def _rejection_sample(stream: SeededStream, alpha: np.ndarray, geom: TrineGeometry,
                      n: int) -> Tuple[np.ndarray, int]:
    accepted = []
    n_accepted = 0
    n_proposed = 0
    rate = 0.5
    while n_accepted < n:
        batch = int(min(PILOT_DRAWS, max(1024, 1.2 * (n - n_accepted) / rate)))
        proposals = sample_dirichlet(stream, alpha, size=batch)
        keep = proposals[constraint_satisfied(geom, proposals)]
        accepted.append(keep)
        n_accepted += keep.shape[0]
        n_proposed += batch
        rate = max(n_accepted / n_proposed, MIN_ACCEPTANCE)
        if n_proposed >= PILOT_DRAWS and n_accepted / n_proposed < MIN_ACCEPTANCE:
            raise NumericalError(
                f"constrained Dirichlet acceptance {n_accepted}/{n_proposed} is below "
                f"{MIN_ACCEPTANCE}; sample in disk coordinates instead ({stream.describe()})"
            )
    if n_proposed and n_accepted / n_proposed < LOW_ACCEPTANCE:
        logger.warning("Low constrained Dirichlet acceptance rate %.4f (alpha=%s)",
                       n_accepted / n_proposed, alpha)
    return np.concatenate(accepted)[:n], n_proposed


def sample_constrained_dirichlet(stream: SeededStream, alpha, geom: TrineGeometry, n: int) -> np.ndarray:
    """
    Exact draws from Dirichlet(alpha) truncated to Theta_gamma by rejection.

    Raises:
        NumericalError: acceptance below 1e-4 after a 10^5-draw pilot
    """
    return _rejection_sample(stream, _check_alpha(alpha), geom, int(n))[0]


def acceptance_rate(stream: SeededStream, alpha, geom: TrineGeometry, n_proposals: int = PILOT_DRAWS) -> float:
    """Fraction of unconstrained Dirichlet draws that land in Theta_gamma."""
    proposals = sample_dirichlet(stream, _check_alpha(alpha), size=n_proposals)
    return float(np.mean(constraint_satisfied(geom, proposals)))


@dataclass(frozen=True)
class QuadratureTable:
    """log theta at the disk nodes of one geometry, for batched integrals."""
    geometry: TrineGeometry
    grid: DiskQuadrature
    log_theta: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        theta = self.geometry.theta(self.grid.s1, self.grid.s2)
        log_theta = np.log(np.maximum(theta, np.finfo(float).tiny)).T.copy()
        log_theta.setflags(write=False)
        object.__setattr__(self, 'log_theta', log_theta)

    def _log_integrand(self, exponents: np.ndarray) -> np.ndarray:
        return (exponents - 1.0) @ self.log_theta + self.grid.log_weights

    def log_integral(self, exponents) -> np.ndarray:
        """log of the disk integral of prod theta_k^(e_k - 1), batched over leading axes."""
        e = np.asarray(exponents, dtype=float)
        flat = e.reshape(-1, K)
        out = np.empty(flat.shape[0])
        for start in range(0, flat.shape[0], QUADRATURE_BATCH):
            block = flat[start:start + QUADRATURE_BATCH]
            out[start:start + QUADRATURE_BATCH] = logsumexp(self._log_integrand(block), axis=-1)
        return out.reshape(e.shape[:-1])

    def mean_log_theta(self, exponents) -> np.ndarray:
        """E[log theta] under the density prop. to prod theta_k^(e_k - 1) on Theta_gamma."""
        e = np.asarray(exponents, dtype=float)
        flat = e.reshape(-1, K)
        out = np.empty_like(flat)
        for start in range(0, flat.shape[0], QUADRATURE_BATCH):
            block = flat[start:start + QUADRATURE_BATCH]
            weights = softmax(self._log_integrand(block), axis=-1)
            out[start:start + QUADRATURE_BATCH] = weights @ self.log_theta.T
        return out.reshape(e.shape)


@lru_cache(maxsize=32)
def quadrature_table(geom: TrineGeometry, grid: DiskQuadrature = DEFAULT_GRID) -> QuadratureTable:
    return QuadratureTable(geom, grid)


def constrained_log_normalizer(exponents, geom: TrineGeometry, grid: DiskQuadrature = DEFAULT_GRID):
    """log of the integral over Theta_gamma of prod theta_k^(e_k - 1) d theta1 d theta2."""
    return quadrature_table(geom, grid).log_integral(exponents) + geom.log_jacobian


@dataclass(frozen=True)
class ConstrainedDirichlet:
    """Dirichlet(alpha) density restricted to Theta_gamma and renormalized."""
    alpha: Tuple[float, ...]
    geometry: TrineGeometry

    def __post_init__(self):
        object.__setattr__(self, 'alpha', tuple(_check_alpha(self.alpha)))

    def sample(self, stream: SeededStream, n: int) -> np.ndarray:
        return sample_constrained_dirichlet(stream, self.alpha, self.geometry, n)

    def log_normalizer(self, grid: DiskQuadrature = DEFAULT_GRID) -> float:
        return float(constrained_log_normalizer(np.array(self.alpha), self.geometry, grid))

    def contains(self, theta):
        return constraint_satisfied(self.geometry, theta)


# ---------------------------------------------------------------------------
# Posterior log moments
# ---------------------------------------------------------------------------

class PosteriorMethod(str, Enum):
    MC = "mc"                   # Rejection-sampled constrained posterior
    QUADRATURE = "quadrature"   # Disk quadrature of the constrained posterior
    EXACT = "exact"             # Digamma identity, constraint ignored


@dataclass(frozen=True)
class LogThetaMoments:
    """E(log theta_k | y) with Monte Carlo standard errors (zero for deterministic methods)."""
    mean: np.ndarray
    standard_error: np.ndarray


def posterior_mean_log_theta(y, alpha, geom: TrineGeometry, cfg: McConfig,
                             method: PosteriorMethod = PosteriorMethod.MC,
                             grid: DiskQuadrature = DEFAULT_GRID) -> LogThetaMoments:
    """
    E(log theta_k | y) for the constrained Dirichlet(alpha) prior.

    The MC method draws cfg.n_draws posterior samples on the posterior stream.
    """
    y = _check_counts(y)
    alpha = _check_alpha(alpha)
    posterior = y + alpha
    method = PosteriorMethod(method)
    if method is PosteriorMethod.EXACT:
        mean = digamma(posterior) - digamma(np.sum(posterior))
        return LogThetaMoments(np.asarray(mean), np.zeros(K))
    if method is PosteriorMethod.QUADRATURE:
        return LogThetaMoments(quadrature_table(geom, grid).mean_log_theta(posterior), np.zeros(K))
    draws = sample_constrained_dirichlet(SeededStream(cfg.base_seed, 0, POSTERIOR_PATH), posterior, geom, cfg.n_draws)
    logs = np.log(draws)
    return LogThetaMoments(
        mean=logs.mean(axis=0),
        standard_error=logs.std(axis=0, ddof=1) / np.sqrt(draws.shape[0])
    )


# ---------------------------------------------------------------------------
# g1 / g2 expansions
# ---------------------------------------------------------------------------

class FamilyKind(str, Enum):
    G1 = "g1_jeffreys_mix"
    G2 = "g2_location_shift"
    PHYSICAL = "physical_gamma"


@dataclass(frozen=True)
class ExpansionFamily:
    """Expansion of the constrained Dirichlet(alpha0 q) prior."""
    kind: FamilyKind
    alpha0: float
    q: Tuple[float, ...] = (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)
    gamma0: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, 'kind', FamilyKind(self.kind))
        q = np.asarray(self.q, dtype=float)
        if q.shape != (K,) or np.any(q <= 0) or abs(q.sum() - 1.0) > 1e-12:
            raise DomainError(f"q must be a positive probability {K}-vector, got {self.q!r}")
        if self.alpha0 <= 0:
            raise DomainError(f"alpha0 must be > 0, got {self.alpha0}")
        object.__setattr__(self, 'q', tuple(q))

    @property
    def base_parameters(self) -> np.ndarray:
        return self.alpha0 * np.asarray(self.q)

    def dirichlet_parameters(self, gamma: float) -> np.ndarray:
        """delta(gamma); for the physical family only the geometry moves."""
        base = self.base_parameters
        if self.kind is FamilyKind.G1:
            if not 0.0 <= gamma <= 1.0:
                raise DomainError(f"g1 needs gamma in [0, 1], got {gamma}")
            return (1.0 - gamma) * base + gamma / 2.0
        if self.kind is FamilyKind.G2:
            shift = np.full(K, -gamma / (K - 1))
            shift[0] = gamma
            delta = self.alpha0 * (np.asarray(self.q) + shift)
            if np.any(delta <= 0):
                raise DomainError(f"g2 parameters are not positive at gamma={gamma}")
            return delta
        return base

    def score_weights(self) -> np.ndarray:
        """d delta_k / d gamma."""
        if self.kind is FamilyKind.G1:
            return 0.5 - self.base_parameters
        if self.kind is FamilyKind.G2:
            w = np.full(K, -self.alpha0 / (K - 1))
            w[0] = self.alpha0
            return w
        raise DomainError("the physical family moves the support; it has no Dirichlet weights")

    def statistic_weights(self) -> np.ndarray:
        """
        Weights of the reported statistics on E(log theta_k | y):
        g1 uses alpha0 q_k - 1/2, g2 uses (1, -1/(K-1), ...).
        """
        if self.kind is FamilyKind.G1:
            return self.base_parameters - 0.5
        if self.kind is FamilyKind.G2:
            w = np.full(K, -1.0 / (K - 1))
            w[0] = 1.0
            return w
        raise DomainError("the physical family has no weighted log-moment statistic")

    @property
    def conflict_tail(self) -> Tail:
        """g1's statistic falls as the data pull toward the Jeffreys prior; g2's rises toward theta1."""
        return Tail.LOWER if self.kind is FamilyKind.G1 else Tail.UPPER

    def spec(self, geom: TrineGeometry) -> PriorExpansionSpec:
        return PriorExpansionSpec(
            family=self.kind.value,
            gamma0=self.gamma0,
            hyperparameters={'alpha0': self.alpha0, 'q': list(self.q), 'cos_sq_gamma': geom.cos_sq}
        )


def _family_statistic(family: ExpansionFamily, y, geom: TrineGeometry, cfg: McConfig,
                      method: PosteriorMethod) -> float:
    moments = posterior_mean_log_theta(y, family.base_parameters, geom, cfg, method)
    return float(moments.mean @ family.statistic_weights())


def score_g1(y, alpha0: float, q, geom: TrineGeometry, cfg: McConfig,
             method: PosteriorMethod = PosteriorMethod.MC) -> float:
    """sum_k (alpha0 q_k - 1/2) E(log theta_k | y)."""
    return _family_statistic(ExpansionFamily(FamilyKind.G1, alpha0, tuple(q)), y, geom, cfg, method)


def score_g2(y, alpha0: float, q, geom: TrineGeometry, cfg: McConfig,
             method: PosteriorMethod = PosteriorMethod.MC) -> float:
    """E(log theta_1 | y) - sum_{k>=2} E(log theta_k | y) / (K - 1)."""
    return _family_statistic(ExpansionFamily(FamilyKind.G2, alpha0, tuple(q)), y, geom, cfg, method)


@dataclass(frozen=True)
class FamilyStatistic:
    """Batched g1/g2 statistic by quadrature (or the unconstrained digamma form)."""
    family: ExpansionFamily
    geometry: TrineGeometry
    grid: DiskQuadrature = DEFAULT_GRID
    method: PosteriorMethod = PosteriorMethod.QUADRATURE

    def __call__(self, counts) -> np.ndarray:
        posterior = _check_counts(counts) + self.family.base_parameters
        if PosteriorMethod(self.method) is PosteriorMethod.EXACT:
            means = digamma(posterior) - digamma(np.sum(posterior, axis=-1, keepdims=True))
        elif PosteriorMethod(self.method) is PosteriorMethod.QUADRATURE:
            means = quadrature_table(self.geometry, self.grid).mean_log_theta(posterior)
        else:
            raise DomainError("batched family statistics support quadrature or exact methods")
        return np.asarray(means) @ self.family.statistic_weights()


def family_predictive(family: ExpansionFamily, gamma: float, geom: TrineGeometry, n_trials: int,
                      stream: SeededStream, size: int) -> np.ndarray:
    """Counts from the family's prior predictive at gamma: constrained Dirichlet, then multinomial."""
    theta = sample_constrained_dirichlet(stream, family.dirichlet_parameters(gamma), geom, size)
    return sample_multinomial(stream, n_trials, theta)


def family_reference(family: ExpansionFamily, geom: TrineGeometry, n_trials: int, cfg: McConfig,
                     grid: DiskQuadrature = DEFAULT_GRID,
                     method: PosteriorMethod = PosteriorMethod.QUADRATURE) -> ReferenceDistribution:
    """Baseline (gamma0) prior predictive distribution of a family's statistic."""
    return simulate_reference(
        FamilyStatistic(family, geom, grid, method),
        partial(family_predictive, family, family.gamma0, geom, n_trials),
        cfg,
        vectorized=True
    )


def family_check(y_obs, family: ExpansionFamily, geom: TrineGeometry, cfg: McConfig,
                 grid: DiskQuadrature = DEFAULT_GRID,
                 method: PosteriorMethod = PosteriorMethod.QUADRATURE) -> CheckResult:
    """g1 or g2 check of observed counts; the tail follows the family."""
    y_obs = _check_counts(y_obs)
    n_trials = int(y_obs.sum())
    statistic = FamilyStatistic(family, geom, grid, method)
    reference = family_reference(family, geom, n_trials, cfg, grid, method)
    return reference.check(
        float(statistic(y_obs)), family.conflict_tail, cfg.base_seed,
        expansion=family.spec(geom), label=family.kind.value
    )


@dataclass
class FamilyPowerCheck:
    """
    Data from one family at gamma, p-values of both the g1 and g2 checks.

    Both references are simulated once at gamma0 on the same replicate counts.
    """
    generating: ExpansionFamily
    geometry: TrineGeometry
    n_trials: int
    cfg: McConfig
    grid: DiskQuadrature = DEFAULT_GRID
    checks: Dict[str, Tuple[FamilyStatistic, ReferenceDistribution, Tail]] = field(init=False, repr=False)

    def __post_init__(self):
        self.checks = {}
        for kind, name in ((FamilyKind.G1, "g1"), (FamilyKind.G2, "g2")):
            family = ExpansionFamily(kind, self.generating.alpha0, self.generating.q)
            statistic = FamilyStatistic(family, self.geometry, self.grid)
            reference = simulate_reference(
                statistic,
                partial(family_predictive, family, family.gamma0, self.geometry, self.n_trials),
                self.cfg,
                vectorized=True
            )
            self.checks[name] = (statistic, reference, family.conflict_tail)

    def evaluate(self, stream: SeededStream, gamma: float, size: int) -> Dict[str, np.ndarray]:
        counts = family_predictive(self.generating, gamma, self.geometry, self.n_trials, stream, size)
        return {
            name: reference.p_value(statistic(counts), tail)
            for name, (statistic, reference, tail) in self.checks.items()
        }


def g1_g2_power_study(alpha0: float, q, geom: TrineGeometry, gamma_grids: Dict[str, Sequence[float]],
                      n_reps: int, cfg: McConfig, n_trials: int = 50,
                      grid: DiskQuadrature = DEFAULT_GRID) -> Dict[str, Dict[str, PowerCurve]]:
    """
    Powers of the g1 and g2 checks under data generated by each family.

    Args:
        gamma_grids: {"g1": grid, "g2": grid} of expansion values per generating family

    Returns:
        {generating family: {"g1": PowerCurve, "g2": PowerCurve}}
    """
    kinds = {"g1": FamilyKind.G1, "g2": FamilyKind.G2}
    study = {}
    for name, gamma_grid in gamma_grids.items():
        if name not in kinds:
            raise DomainError(f"unknown generating family {name!r}; use 'g1' or 'g2'")
        generating = ExpansionFamily(kinds[name], alpha0, tuple(q))
        check = FamilyPowerCheck(generating, geom, n_trials, cfg, grid)
        study[name] = power_curves(check, gamma_grid, n_reps, cfg, label=f"data_{name}")
    return study


def default_gamma_grids() -> Dict[str, Sequence[float]]:
    return {
        "g1": [i / 20.0 for i in range(21)],
        "g2": [i / 60.0 for i in range(21)],
    }


# ---------------------------------------------------------------------------
# Physical expansion in the trine angle
# ---------------------------------------------------------------------------

def h_integrals(y, alpha: float, geom: TrineGeometry,
                grid: DiskQuadrature = DEFAULT_GRID) -> Tuple[float, float]:
    """
    log H1 and log H2 over the unit disk in polar coordinates:
        H1 = int prod theta_k^(n_k + alpha - 1) r dr dphi
        H2 = int prod theta_k^(alpha - 1) r dr dphi
    """
    y = _check_counts(y)
    if alpha <= 0:
        raise DomainError(f"alpha must be > 0, got {alpha}")
    if alpha < 1 and np.any(y == 0):
        logger.warning("H integrals with alpha=%g < 1 and zero counts have reduced accuracy", alpha)
    table = quadrature_table(geom, grid)
    log_h1 = float(table.log_integral(y + alpha))
    log_h2 = float(table.log_integral(np.full(K, float(alpha))))
    return log_h1, log_h2


@dataclass(frozen=True)
class PhysicalScore:
    """
    d/dgamma log(H1 / H2) at gamma0 by central differences, batched over counts.

    H2 depends only on the geometry, so it is evaluated once per instance.
    """
    alpha: float
    geometry: TrineGeometry
    step: float = FD_STEP
    grid: DiskQuadrature = DEFAULT_GRID

    def __post_init__(self):
        if self.alpha <= 0:
            raise DomainError(f"alpha must be > 0, got {self.alpha}")
        if self.step <= 0:
            raise DomainError(f"finite-difference step must be > 0, got {self.step}")
        # Both shifted geometries must stay valid
        self.geometry.shifted(self.step)
        self.geometry.shifted(-self.step)

    def _log_h2_difference(self) -> float:
        prior = np.full(K, float(self.alpha))
        return float(quadrature_table(self.geometry.shifted(self.step), self.grid).log_integral(prior)
                     - quadrature_table(self.geometry.shifted(-self.step), self.grid).log_integral(prior))

    def __call__(self, counts) -> np.ndarray:
        posterior = _check_counts(counts) + self.alpha
        plus = quadrature_table(self.geometry.shifted(self.step), self.grid).log_integral(posterior)
        minus = quadrature_table(self.geometry.shifted(-self.step), self.grid).log_integral(posterior)
        return (plus - minus - self._log_h2_difference()) / (2.0 * self.step)


def physical_score(y, alpha: float, geom0: TrineGeometry, step: float = FD_STEP,
                   grid: DiskQuadrature = DEFAULT_GRID) -> float:
    """Score of the physical expansion at gamma0; positive when the data favour a larger angle."""
    return float(PhysicalScore(alpha, geom0, step, grid)(y))


def physical_predictive(alpha: float, geom: TrineGeometry, n_trials: int,
                        stream: SeededStream, size: int) -> np.ndarray:
    theta = sample_constrained_dirichlet(stream, np.full(K, float(alpha)), geom, size)
    return sample_multinomial(stream, n_trials, theta)


def physical_reference(alpha: float, geom0: TrineGeometry, n_trials: int, cfg: McConfig,
                       step: float = FD_STEP, grid: DiskQuadrature = DEFAULT_GRID) -> ReferenceDistribution:
    return simulate_reference(
        PhysicalScore(alpha, geom0, step, grid),
        partial(physical_predictive, alpha, geom0, n_trials),
        cfg,
        vectorized=True
    )


def _physical_spec(alpha: float, geom0: TrineGeometry) -> PriorExpansionSpec:
    return PriorExpansionSpec(
        family=FamilyKind.PHYSICAL.value,
        gamma0=geom0.gamma,
        hyperparameters={'alpha': alpha, 'cos_sq_gamma0': geom0.cos_sq}
    )


def physical_check(y_obs, alpha: float, geom0: TrineGeometry, cfg: McConfig,
                   step: float = FD_STEP, grid: DiskQuadrature = DEFAULT_GRID) -> Dict[str, CheckResult]:
    """
    Both one-sided checks of the physical expansion from one reference.

    Returns:
        {"upper": data favour a larger angle, "lower": data favour a smaller one}
    """
    y_obs = _check_counts(y_obs)
    n_trials = int(y_obs.sum())
    statistic_obs = physical_score(y_obs, alpha, geom0, step, grid)
    reference = physical_reference(alpha, geom0, n_trials, cfg, step, grid)
    spec = _physical_spec(alpha, geom0)
    results = {
        tail.value: reference.check(statistic_obs, tail, cfg.base_seed, spec, label=f"physical_{tail.value}")
        for tail in (Tail.UPPER, Tail.LOWER)
    }
    logger.info("Physical check at cos^2=%.4f: p_upper=%.6f p_lower=%.6f",
                geom0.cos_sq, results['upper'].p_value, results['lower'].p_value)
    return results


class LevelMode(str, Enum):
    FULL = "full"       # each one-sided test at alpha
    SPLIT = "split"     # each one-sided test at alpha / 2


@dataclass
class PhysicalPowerCheck:
    """Counts generated on Theta_gamma, scored at gamma0 against one reference."""
    alpha: float
    geometry0: TrineGeometry
    n_trials: int
    cfg: McConfig
    level_mode: LevelMode = LevelMode.FULL
    step: float = FD_STEP
    grid: DiskQuadrature = DEFAULT_GRID
    statistic: PhysicalScore = field(init=False, repr=False)
    reference: ReferenceDistribution = field(init=False, repr=False)

    def __post_init__(self):
        self.level_mode = LevelMode(self.level_mode)
        self.statistic = PhysicalScore(self.alpha, self.geometry0, self.step, self.grid)
        self.reference = physical_reference(self.alpha, self.geometry0, self.n_trials, self.cfg, self.step, self.grid)

    def evaluate(self, stream: SeededStream, gamma: float, size: int) -> Dict[str, np.ndarray]:
        counts = physical_predictive(self.alpha, TrineGeometry(gamma), self.n_trials, stream, size)
        scores = self.statistic(counts)
        p = {tail.value: self.reference.p_value(scores, tail) for tail in (Tail.UPPER, Tail.LOWER)}
        if self.level_mode is LevelMode.SPLIT:
            # Doubling maps the alpha/2 threshold onto the study's alpha
            p = {name: np.minimum(1.0, 2.0 * values) for name, values in p.items()}
        return p


def physical_power_study(alpha: float, geom0: TrineGeometry, gamma_grid: Sequence[float], n_trials: int,
                         n_reps: int, cfg: McConfig, level_mode: LevelMode = LevelMode.FULL,
                         grid: DiskQuadrature = DEFAULT_GRID) -> Dict[str, PowerCurve]:
    """
    Power of the two one-sided physical checks when data come from angle gamma.

    Returns:
        {"upper": PowerCurve, "lower": PowerCurve} over gamma_grid (radians)
    """
    check = PhysicalPowerCheck(alpha, geom0, n_trials, cfg, level_mode, grid=grid)
    return power_curves(check, gamma_grid, n_reps, cfg, label="physical")


def angle_grid(geom0: TrineGeometry, half_width: float = 0.3, n_points: int = 13) -> np.ndarray:
    """Angles centred on gamma0, clipped inside (0, pi/2)."""
    grid = geom0.gamma + np.linspace(-half_width, half_width, n_points)
    margin = 2.0 * FD_STEP
    return np.clip(grid, margin, 0.5 * np.pi - margin)
