import numpy as np
import pytest

from coaxsim import load_defaults


@pytest.fixture(scope="session")
def defaults():
    return load_defaults()


@pytest.fixture(scope="session")
def params(defaults):
    return defaults[0]


@pytest.fixture(scope="session")
def gains(defaults):
    return defaults[1]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
