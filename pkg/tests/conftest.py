"""Session-wide pytest wiring: the acceptance marker and its summary table.

Tests marked @pytest.mark.acceptance("<criterion>") report one PASS/FAIL line
per criterion at the end of the run, so the acceptance verdicts are readable
without scanning the full test output.
"""
import pytest

_verdicts: dict[str, str] = {}
_notes: dict[str, str] = {}


@pytest.fixture
def acceptance_note():
    """Attach a measured-value note to a criterion's summary line."""
    def note(name: str, text: str) -> None:
        _notes[name] = text
    return note


def pytest_configure(config):
    config.addinivalue_line(
        "markers",
        "acceptance(name): ties a test to one named acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    name = marker.args[0]
    if report.when == "call":
        if report.skipped:
            _verdicts[name] = "SKIP"
        else:
            _verdicts[name] = "PASS" if report.passed else "FAIL"
    elif report.failed:
        # setup or teardown blew up before the criterion could run
        _verdicts[name] = "FAIL"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for name, verdict in _verdicts.items():
        note = f" ({_notes[name]})" if name in _notes else ""
        terminalreporter.write_line(f"[ACCEPTANCE] {name}: {verdict}{note}")
