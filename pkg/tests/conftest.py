import pytest
from hypothesis import settings

from fluxdac.fluxonium import FluxoniumParams
from fluxdac.units import derive, get_preset

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")

# filled by tests/test_acceptance.py, printed once at the end of the run
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[n])


@pytest.fixture
def criterion():
    """``record(n, title, ok, detail)`` stores and prints one summary line."""

    def record(n, title, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] {n:>2}. {title}: {detail}"
        ACCEPTANCE_LINES[n] = line
        print(line)
        return ok

    return record


@pytest.fixture(scope="session")
def c4r1():
    return get_preset("C4R1-DAC1")


@pytest.fixture(scope="session")
def c4r1_derived(c4r1):
    return derive(c4r1)


@pytest.fixture(scope="session")
def ref_qubit():
    return FluxoniumParams(1.3, 5.08, 0.806)
