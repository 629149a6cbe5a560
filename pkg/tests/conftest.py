import numpy as np
import pytest

from irsbf.config import SystemConfig


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def default_config():
    return SystemConfig()
