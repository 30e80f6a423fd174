import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from memosim.devices import load_params  # noqa: E402


@pytest.fixture(scope="session")
def params():
    return load_params()


ACCEPTANCE = []


@pytest.fixture
def criterion():
    """Record one acceptance line; the assertion still decides the test outcome."""

    def record(label, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'}  {label}" + (f"  ({detail})" if detail else "")
        ACCEPTANCE.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
