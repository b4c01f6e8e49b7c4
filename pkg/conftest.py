"""
Shared fixtures for the nonloc test suite.
"""
import numpy as np
import pytest

from nonloc import grid
from nonloc.models import GridFunction
from nonloc.parallel import set_threads


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: refinement and end-to-end runs (seconds each)")


@pytest.fixture(autouse=True)
def single_thread():
    """Every test starts with one worker thread."""
    set_threads(1)
    yield
    set_threads(1)


@pytest.fixture
def domain():
    """Omega = (-1, 1) with a collar of width 1 and spacing 0.1."""
    return grid.build_domain(-1.0, 1.0, 1.0, 41)


@pytest.fixture
def mu(domain):
    return grid.kernel_from_function(domain, grid.gaussian(0.5), label="gaussian(0.5)")


@pytest.fixture
def wide_domain():
    """Collar wide enough that a unit-width Gaussian keeps mass 1 on Omega."""
    return grid.build_domain(-1.0, 1.0, 3.5, 181)


@pytest.fixture
def wide_mu(wide_domain):
    return grid.kernel_from_function(wide_domain, grid.gaussian(1.0), label="gaussian(1.0)")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_function(domain, rng, scale=1.0):
    return GridFunction(domain, scale * rng.uniform(-1.0, 1.0, domain.node_count))


def admissible_variation(domain, rng):
    values = rng.uniform(-1.0, 1.0, domain.node_count)
    values[domain.fixed] = 0.0
    return GridFunction(domain, values)
