import pytest


@pytest.fixture
def report(request):
    """Record one acceptance line: ``report(n, ok, detail)``."""
    lines = request.config.__dict__.setdefault("_acceptance_lines", {})

    def add(criterion, ok, detail):
        lines[criterion] = f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}"
        return ok

    return add


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.__dict__.get("_acceptance_lines")
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(lines):
        terminalreporter.write_line(lines[key])
