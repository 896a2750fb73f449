import pytest

from mct.potential import make_quartic_well, standing_wave


@pytest.fixture(scope="session")
def quartic():
    return make_quartic_well()


@pytest.fixture(scope="session")
def profile(quartic):
    return standing_wave(quartic)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.verdict_line(n))
