import numpy as np
import pytest

from clawgeo import corpus, ruledgeo, syscore

INTRO_ROWS = ([1, 0, -1, 0], [0, 1, -1, 0])
FINITE_ROWS = ([2, 1, -3, 0, 0, 0, 0], [1, 1, -2, 0, 0, 0, 0])


@pytest.fixture(scope="session")
def intro():
    return syscore.from_source(corpus.read("example_intro"))


@pytest.fixture(scope="session")
def intro_points(intro):
    return syscore.sample_points(intro, count=100, seed=42)


@pytest.fixture(scope="session")
def intro_pair(intro):
    return ruledgeo.LawPair.from_system(intro)


@pytest.fixture(scope="session")
def web_system(intro):
    """Constant-speed image of the intro system (speeds inf, 0, -1)."""
    return syscore.reciprocal_transform(intro, *INTRO_ROWS)[0]


@pytest.fixture(scope="session")
def web_points(intro, web_system):
    return syscore.sample_points(intro, web_system, count=60, seed=42)


@pytest.fixture(scope="session")
def finite_frame(intro):
    return syscore.reciprocal_transform(intro, *FINITE_ROWS)[0]


@pytest.fixture(scope="session")
def finite_dual(finite_frame):
    return ruledgeo.dual_system(finite_frame, ruledgeo.LawPair.from_system(finite_frame))


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[k])
