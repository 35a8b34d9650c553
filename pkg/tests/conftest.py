import numpy as np
import pytest

from gampgap.datagen import gen_predictors, gen_truth_and_data

ACCEPTANCE_LINES = []


def make_problem(M, N, seed, family="gaussian", rho=1.0, sigma_x=1.0, sigma=1.0, kind="iid", **kw):
    F = gen_predictors(kind, M, N, seed, **kw)
    return gen_truth_and_data(F, family, rho, sigma_x, sigma, seed)


@pytest.fixture
def problem():
    return make_problem


def se(v):
    v = np.asarray(v, dtype=float)
    return float(np.std(v, ddof=1) / np.sqrt(v.size))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
