import numpy as np
import pytest

from skylink.geometry import Minkowski, RoundSphereProduct, conformal_bump


@pytest.fixture
def flat():
    return Minkowski(2)


@pytest.fixture
def bump():
    return conformal_bump(0.2, 1.0, (0.0, 0.0))


@pytest.fixture
def sphere():
    return RoundSphereProduct(2)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
