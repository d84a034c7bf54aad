"""Shared fixtures and hypothesis defaults for the suite."""

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "suite",
    derandomize=True,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def table():
    from cspulse.atomic import transition_table

    return transition_table()
