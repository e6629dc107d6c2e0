"""
Scalar special functions used by the score formulas.

Thin, domain-checked wrappers over scipy.special. Every function accepts a
scalar or an array; scalars come back as Python floats.
"""

import numpy as np
from scipy import special

from ..errors import DomainError


def _as_float(value):
    """Return a Python float for 0-d results, the array otherwise."""
    arr = np.asarray(value, dtype=float)
    return float(arr) if arr.ndim == 0 else arr


def _require_positive(x, name: str = "x") -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr <= 0):
        raise DomainError(f"{name} must be finite and > 0, got {x!r}")
    return arr


def log_gamma(x):
    """ln Gamma(x) for x > 0."""
    return _as_float(special.gammaln(_require_positive(x)))


def digamma(x):
    """psi(x) = d/dx ln Gamma(x) for x > 0."""
    return _as_float(special.digamma(_require_positive(x)))


def log_beta(a, b):
    """ln B(a, b) = ln Gamma(a) + ln Gamma(b) - ln Gamma(a + b)."""
    return _as_float(special.betaln(_require_positive(a, "a"), _require_positive(b, "b")))


def std_normal_cdf(x):
    """Phi(x). Uses erfc internally, so far tails stay positive."""
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)):
        raise DomainError("std_normal_cdf is undefined for NaN")
    return _as_float(special.ndtr(arr))


def log_std_normal_cdf(x):
    """ln Phi(x), accurate for x << 0."""
    arr = np.asarray(x, dtype=float)
    if np.any(np.isnan(arr)):
        raise DomainError("log_std_normal_cdf is undefined for NaN")
    return _as_float(special.log_ndtr(arr))


def std_normal_quantile(p):
    """Phi^{-1}(p) for p in (0, 1)."""
    arr = np.asarray(p, dtype=float)
    if np.any(~(arr > 0)) or np.any(~(arr < 1)):
        raise DomainError(f"quantile level must lie in (0, 1), got {p!r}")
    return _as_float(special.ndtri(arr))
