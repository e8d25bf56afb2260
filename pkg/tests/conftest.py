import numpy as np
import pytest

from infobound.markov_chain import random_chain

# filled by test_acceptance; printed after the run
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def chains(rng):
    """A reproducible batch of random chains with dims in 2..5."""
    return [random_chain(rng, tuple(rng.integers(2, 6, size=3))) for _ in range(200)]


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
