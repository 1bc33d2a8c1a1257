"""Pytest plumbing: collect acceptance verdicts and print them after the run."""

import pytest

_VERDICTS: list[tuple[int, str]] = []


@pytest.fixture(scope="session")
def acceptance_report():
    """Callable that records one PASS/FAIL line per acceptance criterion."""

    def record(criterion: int, ok: bool, detail: str) -> None:
        _VERDICTS.append(
            (criterion, f"criterion {criterion}: {'PASS' if ok else 'FAIL'} ({detail})")
        )

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_VERDICTS):
        terminalreporter.write_line(line)
