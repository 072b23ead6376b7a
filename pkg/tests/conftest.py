import pytest

_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance_log(request):
    """Callable that records a criterion line, echoing it live and in the final summary."""
    config = request.config
    lines = config.stash.setdefault(_ACCEPTANCE, [])
    reporter = config.pluginmanager.get_plugin("terminalreporter")

    def log(line):
        lines.append(line)
        if reporter is not None:
            reporter.write_line("")
            reporter.write_line(line)

    return log


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
