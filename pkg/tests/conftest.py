import warnings

import numpy as np
import pytest

from fsbench.svm import ConvergenceWarning


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def no_convergence_warnings():
    with warnings.catch_warnings():
        warnings.simplefilter("error", ConvergenceWarning)
        yield


ACCEPTANCE_RESULTS: dict = {}


def record_criterion(number: int, passed: bool, detail: str) -> None:
    line = "CRITERION %2d: %s  %s" % (number, "PASS" if passed else "FAIL", detail)
    ACCEPTANCE_RESULTS[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_RESULTS):
            terminalreporter.write_line(ACCEPTANCE_RESULTS[k])
