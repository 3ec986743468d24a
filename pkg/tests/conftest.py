import pytest

_KEY = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_KEY] = {}


@pytest.fixture
def verdicts(request):
    """Mapping criterion number -> (passed, detail), reported after the run."""
    return request.config.stash[_KEY]


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(_KEY, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        passed, detail = results[number]
        terminalreporter.line(f"{'PASS' if passed else 'FAIL'} criterion {number}: {detail}")
