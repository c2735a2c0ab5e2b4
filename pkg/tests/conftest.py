import numpy as np
import pytest

from mixldp import Entropic, Exponential, Mean, Quantile, RateProblem, point_mass


def fixture_a():
    return RateProblem(Mean(), (point_mass(0.0), point_mass(1.0)), np.array([0.5, 0.5]))


def fixture_b():
    return RateProblem(Quantile(0.95), (Exponential(1.0), Exponential(2.0)), np.array([0.3, 0.7]))


def fixture_c():
    return RateProblem(Entropic(1.0), (point_mass(0.0), point_mass(1.0)), np.array([0.5, 0.5]))


def fixture_d():
    return RateProblem(
        Mean(), (point_mass(0.0), point_mass(1.0), point_mass(2.0)), np.full(3, 1.0 / 3.0)
    )


FIXTURES = {"A": fixture_a, "B": fixture_b, "C": fixture_c, "D": fixture_d}

# root of 0.7u^2 + 0.3u - 0.05 = 0, x = -ln u
B_QUANTILE = -np.log((-0.3 + np.sqrt(0.09 + 4 * 0.7 * 0.05)) / 1.4)


@pytest.fixture(params=sorted(FIXTURES))
def any_fixture(request):
    return FIXTURES[request.param]()


@pytest.fixture
def fix_a():
    return fixture_a()


@pytest.fixture
def fix_b():
    return fixture_b()


@pytest.fixture
def fix_c():
    return fixture_c()


@pytest.fixture
def fix_d():
    return fixture_d()
