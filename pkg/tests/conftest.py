import pytest

from pgss import ModelSpec


@pytest.fixture
def paper_spec():
    return ModelSpec(6.5, 1.2, 0.75)


ACCEPTANCE_LINES = []


@pytest.fixture
def accept():
    """Record one pass/fail line per acceptance criterion; printed at the end of the run."""

    def record(criterion, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
