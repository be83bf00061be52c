import numpy as np
import pytest

from nlwave.grid import SpaceTimeGrid
from nlwave.reference import reference_coefficients, reference_data, reference_grid


@pytest.fixture(scope="session")
def small_grid():
    return SpaceTimeGrid.from_courant(17, 17, 1.0, 0.5)


@pytest.fixture(scope="session")
def ref_grid():
    return reference_grid()


@pytest.fixture(scope="session")
def ref_coeffs(ref_grid):
    return reference_coefficients(ref_grid)


@pytest.fixture(scope="session")
def ref_data(ref_grid):
    return reference_data(ref_grid)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
