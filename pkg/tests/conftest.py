from pathlib import Path

import hypothesis
import pytest

from ctxmonkey.device.sim import SimScreen, SimScript, SimulatedBackend

hypothesis.settings.register_profile("ci", max_examples=200, deadline=None)
hypothesis.settings.register_profile("dev", max_examples=50, deadline=None)
hypothesis.settings.load_profile("dev")

FIXTURES = Path(__file__).parent / "fixtures"
PKG = "com.example.notes"
MAIN = f"{PKG}.MainActivity"
EDIT = f"{PKG}.EditActivity"


@pytest.fixture
def fixtures() -> Path:
    return FIXTURES


@pytest.fixture
def badging_offline() -> str:
    return (FIXTURES / "badging_offline.txt").read_text()


@pytest.fixture
def badging_net() -> str:
    return (FIXTURES / "badging_net.txt").read_text()


def make_sim(fields=3, rules=(), **kw) -> SimulatedBackend:
    script = SimScript(
        package=PKG,
        screens={
            MAIN: SimScreen.with_fields(fields, package=PKG),
            EDIT: SimScreen.with_fields(2, package=PKG),
        },
        rules=list(rules),
        **kw,
    )
    return SimulatedBackend(script)


# acceptance criteria append (number, name, passed, detail) here; printed after the run
ACCEPTANCE_RESULTS: list[tuple[int, str, bool, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, passed, detail in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} {number:2d} {name}: {detail}")
