"""
Gauss-Legendre rules and the polar tensor grid over the unit disk.
"""

from dataclasses import dataclass, field
from typing import Tuple

import numpy as np
from scipy.special import logsumexp

from ..errors import DomainError


def gauss_legendre(n: int, interval: Tuple[float, float] = (0.0, 1.0)) -> Tuple[np.ndarray, np.ndarray]:
    """
    Gauss-Legendre nodes and weights of order n on an interval.

    Args:
        n: Number of nodes (exact for polynomials of degree 2n - 1)
        interval: (a, b) integration limits

    Returns:
        Tuple of (nodes, weights), nodes ascending
    """
    if n < 1:
        raise DomainError(f"quadrature order must be >= 1, got {n}")
    a, b = interval
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


@dataclass(frozen=True)
class DiskQuadrature:
    """
    Tensor Gauss-Legendre rule in polar coordinates over the closed unit disk.

    Radial nodes on [0, 1] and angular nodes on [0, 2*pi]; the polar
    Jacobian r is folded into the weights. Nodes are strictly interior,
    so integrands that vanish on the boundary circle stay finite in log space.
    """
    n_radial: int = 64
    n_angular: int = 128
    s1: np.ndarray = field(init=False, repr=False, compare=False)
    s2: np.ndarray = field(init=False, repr=False, compare=False)
    log_weights: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        r, wr = gauss_legendre(self.n_radial, (0.0, 1.0))
        phi, wphi = gauss_legendre(self.n_angular, (0.0, 2.0 * np.pi))
        rr, pp = np.meshgrid(r, phi, indexing='ij')
        weights = np.outer(wr * r, wphi)
        object.__setattr__(self, 's1', (rr * np.cos(pp)).ravel())
        object.__setattr__(self, 's2', (rr * np.sin(pp)).ravel())
        object.__setattr__(self, 'log_weights', np.log(weights).ravel())
        for arr in (self.s1, self.s2, self.log_weights):
            arr.setflags(write=False)

    @property
    def size(self) -> int:
        return self.n_radial * self.n_angular

    def refined(self) -> 'DiskQuadrature':
        """Same rule with both node counts doubled."""
        return DiskQuadrature(2 * self.n_radial, 2 * self.n_angular)

    def integrate(self, values: np.ndarray) -> float:
        """Integral of f over the disk given f at the nodes (s1, s2)."""
        return float(np.dot(np.exp(self.log_weights), values))

    def log_integrate(self, log_values: np.ndarray) -> np.ndarray:
        """
        log of the integral of exp(log_values) over the disk.

        log_values may carry leading batch axes; the last axis runs over nodes.
        """
        return logsumexp(log_values + self.log_weights, axis=-1)
