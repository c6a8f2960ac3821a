import numpy as np
import pytest

from qreadout import _kernels


@pytest.fixture(params=["numpy", "numba"])
def backend(request):
    return _kernels.get_backend(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_unit(rng, N=16):
    u = rng.normal(size=N)
    return u / np.linalg.norm(u)


# ---------------------------------------------------------------- acceptance report

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
