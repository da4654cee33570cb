import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from rankone_lyap.ensemble import RankOneEnsemble

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

# three-vector planar ensembles used throughout the tests
PLANAR_PEAK = [(1, 10), (10, 1), (8, 8)]
PLANAR_SHORT = [(1, 10), (10, 1), (3, 3)]
PLANAR_MIXED = [(1, 10), (10, 1), (6.5, -3.5)]

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def peak():
    return RankOneEnsemble.symmetric(PLANAR_PEAK)


@pytest.fixture
def short():
    return RankOneEnsemble.symmetric(PLANAR_SHORT)


@pytest.fixture
def mixed():
    return RankOneEnsemble.symmetric(PLANAR_MIXED)


@pytest.fixture
def ortho():
    return RankOneEnsemble.symmetric([(1, 0), (0, 1)])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
