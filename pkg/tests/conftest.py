import pytest

ACCEPTANCE_LINES = []


@pytest.fixture
def record_criterion():
    def record(number, title, result, limit=None):
        ok = result.passed and (limit is None or result.elapsed < limit)
        budget = "" if limit is None else f", limit {limit:g}s"
        ACCEPTANCE_LINES.append(
            f"[{'PASS' if ok else 'FAIL'}] criterion {number} {title}: {result.summary} "
            f"({result.elapsed:.2f}s{budget})"
        )
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2])):
        terminalreporter.write_line(line)
