import os
import sys

import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

_lines = []


@pytest.fixture(scope="session")
def report():
    """acceptance tests append one 'criterion k: PASS/FAIL ...' line here."""
    def add(line):
        _lines.append(line)
        print(line)
    return add


def pytest_terminal_summary(terminalreporter):
    if _lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
