import numpy as np
import pytest

from qnslab import Grid2D


@pytest.fixture(scope="session")
def grid64():
    return Grid2D(64)


@pytest.fixture(scope="session")
def grid32():
    return Grid2D(32)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
