import numpy as np
import pytest

from steptuner import NoiseSchedule, gmm8, standard_gaussian


@pytest.fixture(scope="session")
def schedule():
    return NoiseSchedule()


@pytest.fixture(scope="session")
def gmm8_model(schedule):
    return gmm8(schedule)


@pytest.fixture(scope="session")
def standard_model(schedule):
    return standard_gaussian(schedule, dim=2)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260815)
