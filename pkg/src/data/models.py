"""
Data models for prior conflict checks.
"""

from dataclasses import dataclass, field
from datetime import datetime
from enum import Enum
from typing import Any, Dict, List, Optional
import json
import math

from ..errors import DomainError

DEFAULT_SEED = 20190527
DEFAULT_ALPHA = 0.05
DEFAULT_CHUNK_SIZE = 1000
MIN_DRAWS = 100


class Tail(str, Enum):
    """Which tail of the reference distribution counts as conflict."""
    UPPER = "upper"
    LOWER = "lower"
    TWO_SIDED = "two_sided"


@dataclass
class McConfig:
    """Monte Carlo settings shared by every check."""
    n_draws: int = 10_000              # Reference draws (or replicate datasets)
    n_workers: int = 1                 # Parallel workers
    base_seed: int = DEFAULT_SEED      # Root of every random stream
    tail: Tail = Tail.UPPER            # p-value tail mode
    alpha: float = DEFAULT_ALPHA       # Significance level for power studies
    chunk_size: int = DEFAULT_CHUNK_SIZE  # Draws per stream
    executor: str = "thread"           # "thread" or "process"

    def __post_init__(self):
        self.tail = Tail(self.tail)
        if self.n_draws < MIN_DRAWS:
            raise DomainError(f"n_draws must be >= {MIN_DRAWS}, got {self.n_draws}")
        if self.n_workers < 1:
            raise DomainError(f"n_workers must be >= 1, got {self.n_workers}")
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.chunk_size < 1:
            raise DomainError(f"chunk_size must be >= 1, got {self.chunk_size}")
        if self.executor not in ("thread", "process"):
            raise DomainError(f"executor must be 'thread' or 'process', got {self.executor!r}")

    def replace(self, **changes) -> 'McConfig':
        data = self.to_dict()
        data.update(changes)
        return McConfig.from_dict(data)

    def to_dict(self) -> dict:
        return {
            'n_draws': self.n_draws,
            'n_workers': self.n_workers,
            'base_seed': self.base_seed,
            'tail': self.tail.value,
            'alpha': self.alpha,
            'chunk_size': self.chunk_size,
            'executor': self.executor
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'McConfig':
        return cls(**data)


@dataclass
class PriorExpansionSpec:
    """Identifies the expansion family g(theta | gamma) a check is built on."""
    family: str                  # e.g. "normal_variance", "g1_jeffreys_mix"
    gamma0: float                # Baseline expansion value
    hyperparameters: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            'family': self.family,
            'gamma0': self.gamma0,
            'hyperparameters': dict(self.hyperparameters)
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'PriorExpansionSpec':
        return cls(**data)


@dataclass
class DrawsSummary:
    """Summary of the simulated reference statistics."""
    mean: float
    sd: float
    min: float
    max: float

    def to_dict(self) -> dict:
        return {
            'mean': self.mean,
            'sd': self.sd,
            'min': self.min,
            'max': self.max
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'DrawsSummary':
        return cls(**data)


@dataclass
class CheckResult:
    """Outcome of one calibrated conflict check."""
    statistic_obs: float
    p_value: float
    n_draws: int
    tail: Tail
    base_seed: int
    draws_summary: DrawsSummary
    expansion: Optional[PriorExpansionSpec] = None
    label: str = ""
    created: datetime = field(default_factory=datetime.now)

    def __post_init__(self):
        self.tail = Tail(self.tail)
        if not 0.0 < self.p_value <= 1.0:
            raise DomainError(f"p_value must lie in (0, 1], got {self.p_value}")

    def is_conflict(self, alpha: float = DEFAULT_ALPHA) -> bool:
        return self.p_value <= alpha

    @property
    def p_value_floor(self) -> float:
        """Smallest p-value resolvable with this many draws."""
        return 1.0 / (self.n_draws + 1)

    def to_dict(self) -> dict:
        return {
            'label': self.label,
            'statistic_obs': self.statistic_obs,
            'p_value': self.p_value,
            'n_draws': self.n_draws,
            'tail': self.tail.value,
            'base_seed': self.base_seed,
            'draws_summary': self.draws_summary.to_dict(),
            'expansion': self.expansion.to_dict() if self.expansion else None,
            'created': self.created.isoformat()
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'CheckResult':
        return cls(
            label=data.get('label', ''),
            statistic_obs=data['statistic_obs'],
            p_value=data['p_value'],
            n_draws=data['n_draws'],
            tail=Tail(data['tail']),
            base_seed=data['base_seed'],
            draws_summary=DrawsSummary.from_dict(data['draws_summary']),
            expansion=PriorExpansionSpec.from_dict(data['expansion']) if data.get('expansion') else None,
            created=datetime.fromisoformat(data['created']) if data.get('created') else datetime.now()
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, json_str: str) -> 'CheckResult':
        return cls.from_dict(json.loads(json_str))


@dataclass
class PowerCurve:
    """Estimated rejection probability across a grid of expansion values."""
    gamma_grid: List[float]
    power: List[float]
    n_reps: int
    alpha: float
    seed: int = DEFAULT_SEED
    label: str = ""

    def __post_init__(self):
        self.gamma_grid = [float(g) for g in self.gamma_grid]
        self.power = [float(p) for p in self.power]
        if len(self.gamma_grid) != len(self.power):
            raise DomainError(
                f"gamma_grid and power lengths differ: {len(self.gamma_grid)} vs {len(self.power)}"
            )
        if any(not (0.0 <= p <= 1.0) or math.isnan(p) for p in self.power):
            raise DomainError("power entries must lie in [0, 1]")

    def standard_errors(self) -> List[float]:
        """Binomial standard error of each power estimate."""
        return [math.sqrt(p * (1.0 - p) / self.n_reps) for p in self.power]

    def power_at(self, gamma: float) -> float:
        for g, p in zip(self.gamma_grid, self.power):
            if math.isclose(g, gamma, rel_tol=0.0, abs_tol=1e-12):
                return p
        raise DomainError(f"gamma={gamma} is not on the grid")

    def to_dict(self) -> dict:
        return {
            'label': self.label,
            'gamma_grid': list(self.gamma_grid),
            'power': list(self.power),
            'n_reps': self.n_reps,
            'alpha': self.alpha,
            'seed': self.seed
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'PowerCurve':
        return cls(**data)


@dataclass
class RunStatus:
    """Current status during a Monte Carlo run."""
    is_running: bool = False
    chunks_done: int = 0
    chunks_total: int = 0
    progress_percent: float = 0.0
    error_message: Optional[str] = None
