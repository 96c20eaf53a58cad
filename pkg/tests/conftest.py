import numpy as np
import pytest

from lsa_gauss.presets import rademacher_gaussian, s1, s1_skew, skew2


def stream(*key) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy=list(key))))


@pytest.fixture
def rng():
    return stream(12345)


@pytest.fixture(scope="session")
def inst_s1():
    return s1()


@pytest.fixture(scope="session")
def inst_s1_skew():
    return s1_skew()


@pytest.fixture(scope="session")
def inst_skew2():
    return skew2()


@pytest.fixture(scope="session")
def inst_rad2():
    return rademacher_gaussian(2)


@pytest.fixture(scope="session")
def inst_rad5():
    return rademacher_gaussian(5)
