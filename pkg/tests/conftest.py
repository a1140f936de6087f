import pytest

_LINES = []


@pytest.fixture
def criterion(request):
    """Print and record one PASS/FAIL line for an acceptance criterion."""
    reporter = request.config.pluginmanager.get_plugin("terminalreporter")

    def emit(number, passed, text):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {text}"
        _LINES.append(line)
        if reporter is not None:
            reporter.write_line("")
            reporter.write_line(line)
        else:
            print(line)
        return passed

    return emit


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_LINES):
            terminalreporter.write_line(line)
