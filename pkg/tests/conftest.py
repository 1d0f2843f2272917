import pytest

_CRITERIA = "cubetau_criteria"


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line per acceptance criterion and assert it."""
    store = getattr(request.config, _CRITERIA, None)
    if store is None:
        store = []
        setattr(request.config, _CRITERIA, store)

    def record(number, passed, detail):
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        store.append(line)
        print(line)
        assert passed, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = getattr(config, _CRITERIA, None)
    if store:
        terminalreporter.section("acceptance criteria")
        for line in sorted(store):
            terminalreporter.write_line(line)
