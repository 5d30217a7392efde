import os

from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

import pytest

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def tripartite_curve():
    """Default-resolution tripartite-IC sweep, shared by the curve and acceptance tests."""
    from icmonogamy.curves import SweepConfig, sweep

    cfg = SweepConfig(criterion="tripartite-ic", threads=min(4, os.cpu_count() or 1))
    return cfg, sweep(cfg)


@pytest.fixture(scope="session")
def bipartite_curve():
    from icmonogamy.curves import SweepConfig, sweep

    cfg = SweepConfig(criterion="bipartite-ic", threads=1)
    return cfg, sweep(cfg)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
