import math

import numpy as np
import pytest
from hypothesis import settings

from bodefrac.funcmodel import FractionalPID, Polynomial, RationalFractal, RationalPlant

settings.register_profile("default", deadline=None, max_examples=60, derandomize=True)
settings.load_profile("default")

TWO_PI = 2.0 * math.pi
FOUR_PI = 4.0 * math.pi


def make_model(num, den, k1=0.0, k0=0.0, km1=0.0, alpha=1.0, beta=1.0):
    return RationalFractal(RationalPlant(Polynomial(num), Polynomial(den)), FractionalPID(k1, k0, km1, alpha, beta))


@pytest.fixture
def classical():
    """L = 3/(s-1), i.e. S = (s-1)/(s+2)."""
    return make_model([3.0], [-1.0, 1.0], k0=1.0)


@pytest.fixture
def fractional():
    """D = (s-1)(s+2)(s+10), N = 1, certified-stable fractional PID with alpha = beta = 0.5."""
    den = Polynomial.from_roots([1.0, -2.0, -10.0]).coeffs
    return make_model([1.0], den, k1=1.0, k0=30.0, km1=5.0, alpha=0.5, beta=0.5)


@pytest.fixture
def stable_loop():
    """D = (s+1)(s+2), N = 1, fractional PID, no open-loop RHP poles."""
    return make_model([1.0], [2.0, 3.0, 1.0], k1=1.0, k0=1.0, km1=1.0, alpha=0.5, beta=0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
