import math

import pytest
from hypothesis import HealthCheck, settings

from delaycluster.ou import OUParams

settings.register_profile(
    "repo",
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")


@pytest.fixture
def unit_ou():
    """lambda = 1, sigma = sqrt 2: unit stationary variance."""
    return OUParams(1.0, math.sqrt(2.0))
