import numpy as np
import pytest

from neurorx.autodiff import precision
from neurorx.phy import LinkConfig


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def f64():
    with precision("float64"):
        yield


@pytest.fixture
def toy_link():
    """4 x 6 grid, two antennas, QPSK, one pilot symbol."""
    return LinkConfig(n_sym=4, n_sc=6, n_rx=2, pilot_symbols=(1,))


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one summary line per acceptance criterion."""
    def _record(number: int, passed: bool, detail: str) -> None:
        ACCEPTANCE_LINES.append(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
