import pytest

from apollonian import content, packing


@pytest.fixture(scope="session")
def symmetric():
    return packing.preset_system("symmetric-unit")


@pytest.fixture(scope="session")
def ford():
    return packing.preset_system("ford")


@pytest.fixture(scope="session")
def symmetric_report(symmetric):
    # shared by content, counting and acceptance checks; K=100 as in the headline runs
    return content.content_report(symmetric, K=100, degree=12, m=6)


def pytest_terminal_summary(terminalreporter):
    # echo the one-line acceptance verdicts, which pytest otherwise captures
    lines = []
    for key in ("passed", "failed", "xfailed", "xpassed"):
        for rep in terminalreporter.stats.get(key, []):
            if rep.when == "call" and "test_acceptance" in rep.nodeid:
                lines += [ln for ln in rep.capstdout.splitlines() if ln.startswith("criterion")]
    if lines:
        terminalreporter.section("acceptance criteria")
        for ln in sorted(lines):
            terminalreporter.write_line(ln)
