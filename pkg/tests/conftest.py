import numpy as np
import pytest

from sbchan.dictionary import (
    SAMPLING_TIME,
    Dictionary,
    build_delay_grid,
    build_dictionary,
    equispaced_pilots,
)


# filled by the acceptance tests, printed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def wrap(matrix) -> Dictionary:
    """A bare matrix as a Dictionary (grid and pattern unused by the estimators)."""
    return Dictionary(matrix=np.asarray(matrix, dtype=complex), grid=None, pattern=None)


def random_problem(rng, M, L):
    phi = (rng.standard_normal((M, L)) + 1j * rng.standard_normal((M, L))) / np.sqrt(2)
    y = (rng.standard_normal(M) + 1j * rng.standard_normal(M)) / np.sqrt(2)
    return phi, y


@pytest.fixture(scope="session")
def default_dicts():
    pattern = equispaced_pilots(1200, 100)
    grid = build_delay_grid(144 * SAMPLING_TIME, 200)
    return pattern, build_dictionary(pattern, grid, "pilots_only"), build_dictionary(pattern, grid, "all_subcarriers")
