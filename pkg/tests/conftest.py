import numpy as np
import pytest

from frontlab.reaction import homogeneous, ignition, kpp
from frontlab.solver import GridSpec


@pytest.fixture(scope="session")
def ign():
    return ignition(0.25, rate=2.0)


@pytest.fixture(scope="session")
def ign_field(ign):
    return homogeneous(ign)


@pytest.fixture(scope="session")
def kpp_profile():
    return kpp(1.0)


@pytest.fixture
def line_grid():
    return GridSpec("line", ((0.0, 20.0),), 0.1)


@pytest.fixture
def plane_grid():
    return GridSpec("plane", ((0.0, 8.0), (0.0, 6.0)), 0.25)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
