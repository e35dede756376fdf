import numpy as np
import pytest

from carnot import algebra, heat


@pytest.fixture(scope="session")
def r1():
    return algebra.builtin("euclidean(1)")


@pytest.fixture(scope="session")
def h3():
    return algebra.builtin("heisenberg(1)")


@pytest.fixture(scope="session")
def h5():
    return algebra.builtin("heisenberg(2)")


@pytest.fixture(scope="session")
def engel():
    return algebra.builtin("engel")


@pytest.fixture(scope="session")
def r1_batch_s2(r1):
    # R^1 at s=2: first-layer law is exact for any step count
    return heat.sample(r1, 2.0, 200_000, 8, seed=101)


@pytest.fixture(scope="session")
def r1_batch_s2_tilt2(r1):
    return heat.sample(r1, 2.0, 200_000, 8, seed=103, tilt=np.array([2.0]))


@pytest.fixture(scope="session")
def h3_batch_s1(h3):
    return heat.sample(h3, 1.0, 50_000, 128, seed=7)
