import numpy as np
import pytest

from vasicek_lse.kernels import KernelSpec
from vasicek_lse.sampler import GaussianPath, TimeGrid


@pytest.fixture
def zero_driver():
    def make(T, n, spec=KernelSpec("fbm", 0.5)):
        grid = TimeGrid(T, n)
        return GaussianPath(grid, spec, np.zeros(n + 1), None)

    return make


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: acceptance criteria A1-A11")


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import ACCEPTANCE
    except ImportError:
        return
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE, key=lambda k: int(k[1:])):
        ok, detail = ACCEPTANCE[name]
        terminalreporter.write_line(f"{name} {'PASS' if ok else 'FAIL'}: {detail}")
