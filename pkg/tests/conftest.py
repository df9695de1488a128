import numpy as np
import pytest

from heavybrw import AngularMeasure, BrwModel, DisplacementModel, OffspringLaw

GEOMETRIC_A = 2.0 / 3.0


def linear_fractional_pmf(a, n, ymax):
    """Exact law of Z_n for geometric offspring (1-a)a^k via the Moebius form of f_n."""
    mu, q = a / (1 - a), (1 - a) / a
    m = mu**n
    # f_n(s) = (A + B s) / (C + D s) from (f-q)/(f-1) = m^-1 (s-q)/(s-1)
    # solve: f = (q (s-1) m - (s-q)) / ((s-1) m - (s-q))
    A, B = -q * m + q, q * m - 1
    C, D = -m + q, m - 1
    # f(s) = (A + B s)/(C + D s) = (A/C + (B/C) s) * sum_k (-(D/C) s)^k
    r = -D / C
    out = np.zeros(ymax + 1)
    out[0] = A / C
    for k in range(1, ymax + 1):
        out[k] = (A / C) * r**k + (B / C) * r ** (k - 1)
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def det2():
    return OffspringLaw.deterministic(2)


@pytest.fixture
def geo():
    return OffspringLaw.geometric(GEOMETRIC_A)


@pytest.fixture
def diagonal():
    return DisplacementModel.polar(1.0, AngularMeasure([[1.0, 1.0]], [1.0]))


@pytest.fixture
def det_iid_model(det2):
    return BrwModel(det2, DisplacementModel.iid(1.0, 1.0))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
