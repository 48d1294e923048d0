import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ewgopt.model import load_bundled  # noqa: E402
from ewgopt.workflows import run_case1, run_case2  # noqa: E402

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def default_scenario():
    return load_bundled("default")


@pytest.fixture(scope="session")
def tiny2():
    return load_bundled("tiny2")


@pytest.fixture(scope="session")
def tiny3():
    return load_bundled("tiny3")


@pytest.fixture(scope="session")
def default_cases(default_scenario):
    return run_case1(default_scenario), run_case2(default_scenario)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
