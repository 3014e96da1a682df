import pytest

# criterion id -> (PASS | FAIL | FLAG, detail), filled by test_acceptance
REPORT: dict[int, tuple[str, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(REPORT):
        status, detail = REPORT[key]
        terminalreporter.write_line(f"[{key:>2}] {status:<4} {detail}")


@pytest.fixture
def report():
    return REPORT
