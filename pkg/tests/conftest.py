import math

import pytest

from bipolarqtm.initial_conditions import PacketSpec, gaussian_packet
from bipolarqtm.numerics import make_grid
from bipolarqtm.utils.config import Settings


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run full-length benchmark runs")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full-length benchmark run, needs --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def grid():
    return make_grid(-35.0, 35.0, 876)


@pytest.fixture
def small_grid():
    return make_grid(-4.0, 4.0, 33)


@pytest.fixture
def proton_spec():
    return PacketSpec(gamma=0.35, x0=-7.0, p0=math.sqrt(2.0 * 2000.0 * 0.0027), m=2000.0)


@pytest.fixture
def proton_packet(proton_spec, grid):
    return gaussian_packet(proton_spec, grid)


@pytest.fixture
def settings(tmp_path):
    return Settings(default_output_dir=str(tmp_path / "runs"))
