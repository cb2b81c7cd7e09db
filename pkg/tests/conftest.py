import numpy as np
import pytest

from frenet_adp import load_config


@pytest.fixture(scope="session")
def default_cfg():
    return load_config("")


@pytest.fixture(scope="session")
def scenario(default_cfg):
    """(path, gains, cost) of the default benchmark scenario."""
    return default_cfg.path(), default_cfg.gains(), default_cfg.cost()


@pytest.fixture()
def rng():
    return np.random.default_rng(20240613)
