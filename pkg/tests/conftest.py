"""Collects the one-line acceptance verdicts and prints them after the run."""

import re

import pytest

_LINES = []


@pytest.fixture(scope="session")
def verdict():
    def record(number, name, passed, detail=""):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {name}" + (f"  [{detail}]" if detail else "")
        _LINES.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_LINES, key=lambda l: (int(re.search(r"\d+", l).group()), l)):
            terminalreporter.write_line(line)
