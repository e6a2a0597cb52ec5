import numpy as np
import pytest

from risbeam.models import SystemConfig
from risbeam.services import ChannelService


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run slow training tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_system():
    """Four elements, two antennas, two users"""
    return SystemConfig(M=2, N=4, K=2, b=1, sigma2_dBm=-100.0)


@pytest.fixture
def unit_system():
    """Pt = sigma2 = 1 W, for hand-checkable rates"""
    return SystemConfig(M=1, N=2, K=1, b=1, Pt_dBm=30.0, sigma2_dBm=30.0)


@pytest.fixture
def tiny_dataset(tiny_system):
    return ChannelService.build_dataset(tiny_system, count=24, eta=0.0, seed=7)


@pytest.fixture(autouse=True)
def testing_profile(monkeypatch):
    monkeypatch.setenv("RISBEAM_ENV", "testing")
