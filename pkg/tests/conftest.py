import functools

import pytest

from hopfsol.phase import SolitonParams
from hopfsol.soliton import BuildConfig, build_soliton

# filled by test_acceptance.py, echoed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@functools.lru_cache(maxsize=None)
def built(n: int, mirror: str = "reflection"):
    """Soliton surfaces are a few seconds each; build every variant once."""
    return build_soliton(SolitonParams(n), BuildConfig(mirror=mirror))


@pytest.fixture(scope="session")
def surface1():
    return built(1)


@pytest.fixture(scope="session", params=[1, 2, 3], ids=lambda n: f"n{n}")
def surface(request):
    return built(request.param)
