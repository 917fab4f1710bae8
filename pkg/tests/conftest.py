import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from parablow.spatial import DomainSpec, build_operator

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.function_scoped_fixture, HealthCheck.too_slow],
)
settings.load_profile("default")

_OPS = {}


def operator(n, length=1.0):
    """Cached 1D operator; building it runs the eigen-solve."""
    key = (n, length)
    if key not in _OPS:
        _OPS[key] = build_operator(DomainSpec.interval(n, length))
    return _OPS[key]


@pytest.fixture
def op8():
    return operator(8)


@pytest.fixture
def op32():
    return operator(32)


@pytest.fixture
def op64():
    return operator(64)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
