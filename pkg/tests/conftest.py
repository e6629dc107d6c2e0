"""Shared fixtures: fixed-seed Monte Carlo settings."""

import pytest

from src.data.models import DEFAULT_SEED, McConfig


@pytest.fixture
def small_cfg():
    """Fast settings for behavioural tests."""
    return McConfig(n_draws=2000, chunk_size=500, base_seed=12345)


@pytest.fixture
def cfg():
    """Desk-scale settings."""
    return McConfig(n_draws=10_000, chunk_size=1000, base_seed=DEFAULT_SEED)


@pytest.fixture
def large_cfg():
    """Full-scale reference simulations (1e5 draws)."""
    return McConfig(n_draws=100_000, chunk_size=10_000, base_seed=DEFAULT_SEED)
