import pytest

_RESULTS = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record ``(label, passed, detail)`` and print it; lines are repeated in the terminal summary."""
    store = request.config.stash.setdefault(_RESULTS, [])

    def record(label: str, passed: bool, detail: str) -> bool:
        line = f"{label}: {'PASS' if passed else 'FAIL'} ({detail})"
        print(line)
        store.append(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_RESULTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
