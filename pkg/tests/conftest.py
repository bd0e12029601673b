import time

import numpy as np
import pytest

from hyperseq import bernstein_szego, cartier_dunau, chebyshev_first, chebyshev_second, jacobi

BUILTINS = {
    "chebyshev1": chebyshev_first,
    "chebyshev2": chebyshev_second,
    "jacobi_half": lambda: jacobi(0.5, 0.5),
    "jacobi_1.5_0.5": lambda: jacobi(1.5, 0.5),
    "jacobi_0.5_-0.5": lambda: jacobi(0.5, -0.5),
    "cartier_dunau_2": lambda: cartier_dunau(2.0),
    "bernstein_szego": lambda: bernstein_szego(0.2, 0.3),
}


@pytest.fixture(params=sorted(BUILTINS))
def builtin(request):
    return BUILTINS[request.param]()


@pytest.fixture
def rng():
    return np.random.default_rng(20240617)


SUITE_BUDGET_S = 120.0
_start = time.perf_counter()


def _elapsed() -> float:
    return time.perf_counter() - _start


def pytest_terminal_summary(terminalreporter):
    elapsed = _elapsed()
    verdict = "PASS" if elapsed < SUITE_BUDGET_S else "FAIL"
    terminalreporter.write_line(f"criterion 12 (suite runtime): {verdict}  {elapsed:.1f} s (budget {SUITE_BUDGET_S:.0f} s)")


def pytest_sessionfinish(session, exitstatus):
    if exitstatus == 0 and _elapsed() >= SUITE_BUDGET_S:
        session.exitstatus = pytest.ExitCode.TESTS_FAILED
