import random

import pytest
from hypothesis import HealthCheck, settings

from psc.group import get_group

settings.register_profile("psc", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow, HealthCheck.data_too_large])
settings.load_profile("psc")


@pytest.fixture(scope="session")
def G():
    return get_group("ristretto255")


@pytest.fixture(params=["ristretto255", "insecure-additive"])
def any_group(request):
    return get_group(request.param)


@pytest.fixture
def rng():
    return random.Random(20240611)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
