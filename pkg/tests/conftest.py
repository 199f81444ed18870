import pytest

CRITERIA: list[str] = []


@pytest.fixture
def report(request):
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""
    capman = request.config.pluginmanager.getplugin("capturemanager")

    def _report(number: int, ok: bool, detail: str) -> None:
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        CRITERIA.append(line)
        with capman.global_and_fixture_disabled():
            print(f"\n{line}")
        assert ok, line

    return _report


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA:
            terminalreporter.write_line(line)
