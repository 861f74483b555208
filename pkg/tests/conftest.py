import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from countpred.models import InarchModel, InarModel, NegBinomial, Poisson

settings.register_profile(
    "default", max_examples=60, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def poi_inar():
    return InarModel(0.5, Poisson(1.0))


@pytest.fixture(scope="session")
def nb_inar():
    return InarModel(0.5, NegBinomial(2.0, 2.0 / 3.0))


@pytest.fixture(scope="session")
def inarch():
    return InarchModel(1.0, 0.5)


@pytest.fixture(scope="session")
def poi_series(poi_inar):
    return poi_inar.simulate(500, rng=np.random.default_rng(11))


@pytest.fixture(scope="session")
def inarch_series(inarch):
    return inarch.simulate(500, rng=np.random.default_rng(12))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
