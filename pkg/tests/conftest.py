import numpy as np
import pytest

from bisense.config import ScenarioConfig


@pytest.fixture
def cfg() -> ScenarioConfig:
    return ScenarioConfig()


@pytest.fixture
def small_cfg() -> ScenarioConfig:
    """Reduced dimensions so covariance-level tests stay fast."""
    return ScenarioConfig(m_symbols=6, n_rx=6, n_tx=6, k_subcarriers=64)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)
