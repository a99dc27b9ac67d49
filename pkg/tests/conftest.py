from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

from termcert.fixtures import coin_loops, halving_game, random_walk

settings.register_profile(
    "ci",
    derandomize=True,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.filter_too_much],
)
settings.load_profile("ci")


@pytest.fixture(scope="session")
def halving():
    return halving_game()


@pytest.fixture(scope="session")
def walk():
    return random_walk()


@pytest.fixture(scope="session")
def coins():
    return coin_loops()
