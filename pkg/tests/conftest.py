import numpy as np
import pytest

from oscint.groups import abelian_group, heisenberg_group
from oscint.lattice import Grid


@pytest.fixture(scope="session")
def r1():
    return abelian_group(1)


@pytest.fixture(scope="session")
def r2():
    return abelian_group(2)


@pytest.fixture(scope="session")
def h1():
    return heisenberg_group()


@pytest.fixture(scope="session")
def grid_r1(r1):
    return Grid(r1, 0.125, (32,))


@pytest.fixture(scope="session")
def grid_h1(h1):
    return Grid(h1, 0.25, (6, 6, 12))


@pytest.fixture()
def rng():
    return np.random.Generator(np.random.Philox(12345))
