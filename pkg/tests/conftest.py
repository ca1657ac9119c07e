import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from seqest import GaussianPrior, PrecisionBand  # noqa: E402

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def default_band():
    return PrecisionBand(0.2, 1.0)


@pytest.fixture
def unit_prior():
    return GaussianPrior(2.0, 1.0)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
