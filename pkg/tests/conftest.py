import numpy as np
import pytest

from abscop.copula_models import CopulaSpec, Family, sample_copula

CLAYTON_THETA = 1.076
FRANK_THETA = 3.45
GUMBEL_THETA = 2.0


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def clayton_1000():
    return sample_copula(CopulaSpec(Family.CLAYTON, CLAYTON_THETA, 2), 1000, np.random.default_rng(7))


@pytest.fixture(scope="session")
def gumbel_1000():
    return sample_copula(CopulaSpec(Family.GUMBEL, GUMBEL_THETA, 2), 1000, np.random.default_rng(8))
