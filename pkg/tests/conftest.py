import contextlib

import pytest

_LINES = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_LINES] = []


@pytest.fixture
def criterion(request):
    """Context manager that records one pass/fail line for an acceptance criterion."""
    lines = request.config.stash[_LINES]

    @contextlib.contextmanager
    def record(number, title):
        ok = False
        try:
            yield
            ok = True
        finally:
            line = f"{'PASS' if ok else 'FAIL'}  criterion {number}: {title}"
            lines.append((number, line))
            print(line)

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_LINES, [])
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(lines):
        terminalreporter.write_line(line)
