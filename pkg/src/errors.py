"""
Exception types for prior conflict checking.

The CLI maps these onto exit codes: DomainError and ConfigError exit 2,
NumericalError exits 1.
"""


class PriorConflictError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(PriorConflictError, ValueError):
    """An argument violates a precondition (bad parameter, point outside a domain)."""


class ConfigError(PriorConflictError, ValueError):
    """A config file, preset or output path could not be used."""


class NumericalError(PriorConflictError, RuntimeError):
    """A Monte Carlo or quadrature computation failed."""
