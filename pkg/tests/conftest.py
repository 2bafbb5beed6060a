import pytest

_CRITERIA = []


@pytest.fixture
def record_criterion():
    """Collect one pass/fail line per acceptance criterion for the summary."""

    def record(cid, passed, detail=""):
        line = f"criterion {cid}: {'PASS' if passed else 'FAIL'}  {detail}".rstrip()
        _CRITERIA.append(line)
        print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)
