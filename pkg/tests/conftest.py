import math

import numpy as np
import pytest

from sideways.forward_solver import Problem1Config
from sideways.grid_spectral import Grid1D, Grid2D
from sideways.harness import manufacture_problem1, manufacture_problem2

C0 = 4.0 / math.sqrt(2.0 * math.pi)


@pytest.fixture(scope="session")
def problem1():
    return manufacture_problem1()


@pytest.fixture(scope="session")
def problem2():
    return manufacture_problem2()


@pytest.fixture(scope="session")
def small_cfg():
    """Coarse exterior grid for fast solver tests."""
    return Problem1Config(Grid2D(Grid1D(8.0, 128), 1.0, 9.0, 64))


@pytest.fixture(scope="session")
def default_cfg():
    return Problem1Config(Grid2D(Grid1D(8.0, 256), 1.0, 9.0, 128))


@pytest.fixture(scope="session")
def strip_grid():
    return Grid2D(Grid1D(8.0, 256), 0.0, 1.0, 65)


def rng(seed=0):
    return np.random.default_rng(seed)
