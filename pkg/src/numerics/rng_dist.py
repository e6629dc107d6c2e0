"""
Reproducible random streams and the samplers the checks need.

A SeededStream is identified by (base_seed, stream_id, path). Its generator
is built from numpy's SeedSequence with the stream coordinates as spawn key,
so two streams with equal coordinates give identical sequences and distinct
coordinates give independent ones. Monte Carlo work is split into chunks
that each own a stream, which keeps results independent of scheduling.
"""

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from ..errors import DomainError
from .special_fn import log_gamma

PROBABILITY_TOLERANCE = 1e-12


@dataclass(frozen=True)
class SeededStream:
    """Single-owner random stream. Use distinct stream_ids across threads."""
    base_seed: int
    stream_id: int = 0
    path: Tuple[int, ...] = ()
    _generator: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.stream_id < 0:
            raise DomainError(f"stream_id must be non-negative, got {self.stream_id}")
        seq = np.random.SeedSequence(
            entropy=int(self.base_seed) % (1 << 64),
            spawn_key=tuple(int(k) for k in self.path) + (int(self.stream_id),)
        )
        object.__setattr__(self, '_generator', np.random.default_rng(seq))

    @property
    def generator(self) -> np.random.Generator:
        return self._generator

    def child(self, k: int) -> 'SeededStream':
        """Independent stream nested under this one."""
        return SeededStream(self.base_seed, k, self.path + (self.stream_id,))

    def describe(self) -> str:
        return f"seed={self.base_seed} stream={self.stream_id} path={list(self.path)}"


def _require_positive(value, name: str):
    arr = np.asarray(value, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0):
        raise DomainError(f"{name} must be finite and > 0, got {value!r}")
    return arr


def _require_count(n, name: str = "n") -> int:
    if int(n) != n or n < 0:
        raise DomainError(f"{name} must be a non-negative integer, got {n!r}")
    return int(n)


def _buffer(out: Optional[np.ndarray], n: int) -> np.ndarray:
    if out is None:
        return np.empty(n, dtype=np.float64)
    if out.shape != (n,) or out.dtype != np.float64:
        raise DomainError(f"out buffer must be float64 with shape ({n},)")
    return out


def sample_uniform(stream: SeededStream, n: int, out: Optional[np.ndarray] = None) -> np.ndarray:
    n = _require_count(n)
    buf = _buffer(out, n)
    stream.generator.random(out=buf)
    return buf


def sample_normal(stream: SeededStream, loc: float = 0.0, scale: float = 1.0, n: int = 1,
                  out: Optional[np.ndarray] = None) -> np.ndarray:
    _require_positive(scale, "scale")
    n = _require_count(n)
    buf = _buffer(out, n)
    stream.generator.standard_normal(out=buf)
    buf *= scale
    buf += loc
    return buf


def sample_gamma(stream: SeededStream, shape, scale: float = 1.0, size=None) -> np.ndarray:
    """Gamma(shape, scale) draws; numpy uses Marsaglia-Tsang with the shape < 1 boost."""
    shape = _require_positive(shape, "shape")
    _require_positive(scale, "scale")
    return stream.generator.standard_gamma(shape, size=size) * scale


def sample_beta(stream: SeededStream, a: float, b: float, n: int = 1) -> np.ndarray:
    _require_positive(a, "a")
    _require_positive(b, "b")
    return stream.generator.beta(a, b, size=_require_count(n))


def sample_binomial(stream: SeededStream, n_trials, theta, size=None) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if np.any((theta < 0) | (theta > 1)):
        raise DomainError("binomial probability must lie in [0, 1]")
    return stream.generator.binomial(n_trials, theta, size=size)


def sample_inverse_gamma(stream: SeededStream, a, b, n: int = 1) -> np.ndarray:
    """Draws of 1 / Gamma(shape a, rate b)."""
    a = _require_positive(a, "a")
    b = _require_positive(b, "b")
    n = _require_count(n)
    return b / stream.generator.standard_gamma(a, size=n)


def exp_power_scale_constant(q: float) -> float:
    """c = (Gamma(3/q) / Gamma(1/q))^{1/2}; the density has variance tau^2."""
    return float(np.exp(0.5 * (log_gamma(3.0 / q) - log_gamma(1.0 / q))))


def sample_exp_power(stream: SeededStream, tau: float, q: float, n: int,
                     out: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Draws from the exponential power density with scale tau and shape q.

    Construction: U ~ Gamma(1/q, 1), W = U^{1/q}, random sign,
    nu = sign * tau * W / c with c = (Gamma(3/q)/Gamma(1/q))^{1/2}.
    q = 2 is N(0, tau^2); q = 1 is a Laplace with scale tau/sqrt(2).
    """
    _require_positive(tau, "tau")
    _require_positive(q, "q")
    n = _require_count(n)
    buf = _buffer(out, n)
    gen = stream.generator
    gen.standard_gamma(1.0 / q, size=n, out=buf)
    np.power(buf, 1.0 / q, out=buf)
    buf *= tau / exp_power_scale_constant(q)
    signs = gen.integers(0, 2, size=n)
    buf[signs == 0] *= -1.0
    return buf


def sample_dirichlet(stream: SeededStream, alpha, size: Optional[int] = None) -> np.ndarray:
    """
    Dirichlet(alpha) draws as renormalized gamma variates.

    Returns a probability vector, or a (size, K) matrix when size is given.
    """
    alpha = _require_positive(alpha, "alpha")
    if alpha.ndim != 1 or alpha.size < 2:
        raise DomainError("alpha must be a vector with at least two entries")
    shape = alpha.shape if size is None else (int(size), alpha.size)
    draws = stream.generator.standard_gamma(alpha, size=shape)
    totals = draws.sum(axis=-1, keepdims=True)
    if np.any(totals <= 0):
        # Every gamma draw underflowed; only happens for tiny alpha
        return stream.generator.dirichlet(alpha, size=size)
    return draws / totals


def validate_probability_vector(theta) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if np.any(theta < 0) or np.any(~np.isfinite(theta)):
        raise DomainError(f"probabilities must be finite and >= 0, got {theta!r}")
    if np.any(np.abs(theta.sum(axis=-1) - 1.0) > PROBABILITY_TOLERANCE):
        raise DomainError(f"probabilities must sum to 1 within {PROBABILITY_TOLERANCE}")
    return theta


def sample_multinomial(stream: SeededStream, n_trials: int, theta, size: Optional[int] = None) -> np.ndarray:
    """
    Multinomial counts; theta may be a single vector or a (R, K) matrix of
    per-row probabilities, in which case one count vector per row is drawn.
    """
    n_trials = _require_count(n_trials, "n_trials")
    theta = validate_probability_vector(theta)
    # Renormalize away rounding so numpy's sum(pvals[:-1]) <= 1 check holds
    theta = theta / theta.sum(axis=-1, keepdims=True)
    return stream.generator.multinomial(n_trials, theta, size=size)


def sample_uniform_disk(stream: SeededStream, n: int) -> np.ndarray:
    """Uniform points on the closed unit disk, shape (n, 2)."""
    n = _require_count(n)
    gen = stream.generator
    radius = np.sqrt(gen.random(n))
    angle = gen.uniform(0.0, 2.0 * np.pi, size=n)
    return np.column_stack((radius * np.cos(angle), radius * np.sin(angle)))
