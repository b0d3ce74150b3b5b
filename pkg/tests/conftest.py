import pytest

from pllnoise import presets
from pllnoise.synthesis import synth_psd


@pytest.fixture(scope="session")
def ubx_trace():
    return synth_psd(presets.UBX_MEAN)


@pytest.fixture(scope="session")
def cbx_trace():
    return synth_psd(presets.CBX_MEAN)


@pytest.fixture(scope="session")
def single_trace():
    """Noise-free trace of the single worked-through UBX device."""
    return synth_psd(presets.UBX_SINGLE)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_log():
    """Record one PASS/FAIL line per acceptance criterion."""

    def log(number: int, ok: bool, detail: str) -> None:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)

    return log


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
