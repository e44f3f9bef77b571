import pytest

_LINES: list[str] = []


@pytest.fixture
def verdict():
    """Record one acceptance line; shown in the terminal summary."""

    def record(number: int, title: str, passed: bool, detail: str, seconds: float):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {title} ({detail}; {seconds:.2f} s)"
        _LINES.append((number, line))
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_LINES):
            terminalreporter.write_line(line)
