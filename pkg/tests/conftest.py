import numpy as np
import pytest

from pwa_reach import BimodalSystem, io
from pwa_reach.solve import COMMON, PIECEWISE, Status, solve_at_alpha


def scalar_system(a=-1.0, b=1.0, f=0.0):
    return BimodalSystem([[a]], [[a]], [[b]], None, None, [1.0], f, [[1.0]])


@pytest.fixture(scope="session")
def ex1():
    return io.load_system("example1")


@pytest.fixture(scope="session")
def ex2():
    return io.load_system("example2")


@pytest.fixture(scope="session")
def scalar():
    return scalar_system()


def _solve(sys, kind, alpha):
    status, cert, info = solve_at_alpha(sys, kind, alpha)
    assert status is Status.OPTIMAL, info
    return cert


@pytest.fixture(scope="session")
def ex1_certs(ex1):
    return {k: _solve(ex1, k, 0.4) for k in (PIECEWISE, COMMON)}


@pytest.fixture(scope="session")
def ex2_certs(ex2):
    return {k: _solve(ex2, k, 0.1) for k in (PIECEWISE, COMMON)}


def random_spd(rng, n, lo=0.2):
    G = rng.standard_normal((n, n))
    return G @ G.T + lo * np.eye(n)
