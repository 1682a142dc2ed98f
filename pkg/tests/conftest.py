import numpy as np
import pytest

from randur.model import DurationPmf, ModelParams


@pytest.fixture
def uniform2():
    return ModelParams.uniform(2, 0.0, 1.0, 1.0)


@pytest.fixture
def desk_params():
    """Three-duration uniform model with levels 2 and 5 in unit-10 noise."""
    return ModelParams.uniform(3, 2.0, 5.0, 10.0)


def random_params(delta, rng, sigma=1.0):
    """Strictly positive random pmfs with moderate levels."""
    p1 = rng.dirichlet(np.ones(delta)) * 0.9 + 0.1 / delta
    p2 = rng.dirichlet(np.ones(delta)) * 0.9 + 0.1 / delta
    mu1 = float(rng.uniform(0, 1.5))
    mu2 = mu1 + float(rng.uniform(0.1, 2.0))
    return ModelParams(delta, DurationPmf(p1 / p1.sum()), DurationPmf(p2 / p2.sum()), mu1, mu2, sigma)


@pytest.fixture
def make_random_params():
    return random_params
