import pytest

_ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def record_criterion():
    """Store one verdict line per acceptance criterion for the end-of-run summary."""

    def record(number: int, title: str, passed: bool, detail: str = "") -> None:
        verdict = "PASS" if passed else "FAIL"
        _ACCEPTANCE[number] = f"{verdict} criterion {number}: {title}" + (f" ({detail})" if detail else "")

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        terminalreporter.write_line(_ACCEPTANCE[number])
