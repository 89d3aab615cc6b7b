import contextlib
import time

import pytest

_RESULTS = pytest.StashKey[dict]()


class _Record:
    def __init__(self):
        self.detail = ""


@pytest.fixture
def acceptance(request):
    """Context manager that records one PASS/FAIL line per acceptance criterion."""
    store = request.config.stash.setdefault(_RESULTS, {})

    @contextlib.contextmanager
    def criterion(number, title):
        rec = _Record()
        t0 = time.perf_counter()
        status = "FAIL"
        try:
            yield rec
            status = "PASS"
        finally:
            line = f"criterion {number} {status}: {title} [{time.perf_counter() - t0:.1f}s] {rec.detail}"
            store[number] = line
            print(line)

    return criterion


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(_RESULTS, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(store):
        terminalreporter.write_line(store[number])
