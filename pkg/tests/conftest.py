import contextlib
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"
ROOT = Path(__file__).resolve().parents[1]

_ACCEPTANCE = []


@pytest.fixture
def fixtures_dir():
    return FIXTURES


@pytest.fixture
def criterion():
    """Record one pass/fail line per acceptance criterion for the terminal summary."""

    @contextlib.contextmanager
    def record(number, title):
        entry = [number, title, "FAIL", ""]
        _ACCEPTANCE.append(entry)
        try:
            yield entry
        except pytest.skip.Exception as exc:
            entry[2] = "SKIP"
            entry[3] = str(exc)
            raise
        else:
            entry[2] = "PASS"

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, status, detail in sorted(_ACCEPTANCE, key=lambda e: e[0]):
        line = f"[{status}] {number:>2}. {title}"
        if detail:
            line += f" -- {detail}"
        terminalreporter.write_line(line)
