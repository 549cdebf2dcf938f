"""Session-scoped solves shared by the analysis and acceptance tests.

The 1/128 runs dominate suite runtime; the fixtures delegate to the
acceptance module's memo cache so each (problem, resolution) pair is
solved exactly once per session, no matter which modules request it.
"""

import pytest

from ma_eigen import acceptance
from ma_eigen.geometry import Disc, unit_square


@pytest.fixture(scope="session")
def square():
    return unit_square()


@pytest.fixture(scope="session")
def disc():
    return Disc((0.0, 0.0), 1.0)


@pytest.fixture(scope="session")
def sq_p0_64():
    return acceptance.p0_solution("square", 1 / 64)


@pytest.fixture(scope="session")
def sq_p0_128():
    return acceptance.p0_solution("square", 1 / 128)


@pytest.fixture(scope="session")
def disc_p0_64():
    return acceptance.p0_solution("disc", 1 / 64)


@pytest.fixture(scope="session")
def disc_p0_128():
    return acceptance.p0_solution("disc", 1 / 128)


@pytest.fixture(scope="session")
def sq_p1_64():
    return acceptance.p1_solution("square", 1 / 64)


@pytest.fixture(scope="session")
def sq_p1_128():
    return acceptance.p1_solution("square", 1 / 128)


@pytest.fixture(scope="session")
def disc_p1_128():
    return acceptance.p1_solution("disc", 1 / 128)
