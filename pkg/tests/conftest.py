import math

import numpy as np
import pytest

RABI = 2 * math.pi * 20e3
ETA = 0.2156
KAPPA = 1 - 0.5 * ETA**2


@pytest.fixture(scope="session")
def rabi():
    return RABI


@pytest.fixture()
def rng():
    return np.random.default_rng(42)
