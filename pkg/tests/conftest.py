import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from dzk.field import ScalarField, make_grid

settings.register_profile(
    "dzk", deadline=None, max_examples=25, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("dzk")


def random_field(grid, seed, real=False):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=grid.shape)
    if not real:
        v = v + 1j * rng.normal(size=grid.shape)
    return ScalarField(grid, v)


@pytest.fixture
def grid8():
    return make_grid(8, 8, 8, 2 * np.pi, 2 * np.pi, 2 * np.pi)


@pytest.fixture
def grid16():
    return make_grid(16, 12, 10, 7.0, 5.0, 6.0)
