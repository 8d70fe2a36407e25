import pytest

_LINES = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_LINES] = []


@pytest.fixture
def acceptance_report(request):
    """Record one PASS/FAIL line for an acceptance criterion and assert it."""
    lines = request.config.stash[_LINES]

    def report(number, name, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'}  criterion {number}: {name} | {detail}"
        lines.append((number, line))
        print(line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
