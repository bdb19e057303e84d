import numpy as np
import pytest

from vortexlab.geometry import MomentModel
from vortexlab.grids import TorusGrid
from vortexlab.sampling import random_state


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture
def model1():
    return MomentModel(n=1, weights=np.array([1]), level=1.0, strict_free=True)


@pytest.fixture
def model2():
    return MomentModel(n=2, weights=np.array([1, 1]), level=1.0, strict_free=True)


@pytest.fixture
def model_w12():
    return MomentModel(n=2, weights=np.array([1, 2]), level=1.0)


@pytest.fixture
def grid16_d1():
    return TorusGrid(L_s=2 * np.pi, L_t=2 * np.pi, N_s=16, N_t=16, degree=1)


@pytest.fixture
def grid16_d0():
    return TorusGrid(L_s=2 * np.pi, L_t=2 * np.pi, N_s=16, N_t=16, degree=0)


@pytest.fixture
def state2(model2, grid16_d1, rng):
    return random_state(model2, grid16_d1, 0.3, rng)
