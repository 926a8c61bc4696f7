import pytest

_RESULTS: dict[int, tuple[str, str]] = {}


@pytest.fixture
def record():
    """``record(criterion, passed, detail)`` stores one acceptance line."""
    def _record(criterion: int, passed, detail: str) -> None:
        status = passed if isinstance(passed, str) else ("PASS" if passed else "FAIL")
        _RESULTS[criterion] = (status, detail)
        print(f"criterion {criterion}: {status} ({detail})")
    return _record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(_RESULTS):
        status, detail = _RESULTS[criterion]
        terminalreporter.write_line(f"criterion {criterion}: {status}  {detail}")
