import numpy as np
import pytest

from fasem.model import SystemConfig, draw_scenario
from fasem.semantic import LoadModel


@pytest.fixture
def cfg():
    return SystemConfig()


@pytest.fixture
def small_cfg():
    # Small enough for exhaustive enumeration in oracle-style tests.
    return SystemConfig(n_tx=4, m_ports=8, m_active=2)


@pytest.fixture
def model():
    return LoadModel.default()


@pytest.fixture
def scenario(cfg):
    return draw_scenario(cfg, np.random.default_rng(123))
