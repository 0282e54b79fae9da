import numpy as np
import pytest

from leotrack.hybrid import HybridConfig
from leotrack.link import LinkBudget
from leotrack.orbit import OrbitShape
from leotrack.signal import zadoff_chu

ZENITH_GAMMA = np.array([np.pi / 2, 0.0, 3 * np.pi / 2])


@pytest.fixture(scope="session")
def shape():
    return OrbitShape.from_altitude()


@pytest.fixture(scope="session")
def hybrid():
    return HybridConfig()


@pytest.fixture(scope="session")
def budget():
    return LinkBudget()


@pytest.fixture(scope="session")
def pilot():
    return zadoff_chu(63, 29)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def zenith_gamma():
    return ZENITH_GAMMA.copy()


ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
