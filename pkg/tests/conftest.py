import numpy as np
import pytest

from soliton import kernels


@pytest.fixture(scope="session")
def shooting_results():
    """Accepted shooting runs to t = 20, shared across test modules."""
    from soliton.shooting import bisect_initial
    return {n: bisect_initial(n, 20.0) for n in (2, 3, 4)}


@pytest.fixture(scope="session")
def compare_grid():
    return np.linspace(0.1, 1.0, 91)


backends = pytest.mark.parametrize(
    "backend",
    ["python"] + (["cython"] if kernels.compiled_available() else []))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[k])
