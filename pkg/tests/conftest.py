import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mapdfs.layouts import load_bundled  # noqa: E402
from mapdfs.orientation import orient_main_area  # noqa: E402

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def bundled():
    return {name: load_bundled(name) for name in ("env1", "env2", "env3", "env4")}


@pytest.fixture(scope="session")
def oriented(bundled):
    return {name: orient_main_area(g) for name, g in bundled.items()}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
