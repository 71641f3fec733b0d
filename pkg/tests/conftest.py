import numpy as np
import pytest

from paulidyn import mub_family


@pytest.fixture(scope="session")
def family2():
    return mub_family(2)


@pytest.fixture(scope="session")
def family3():
    return mub_family(3)


@pytest.fixture(scope="session")
def family5():
    return mub_family(5)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


PAULI = {
    1: np.array([[0, 1], [1, 0]], dtype=complex),
    2: np.array([[0, -1j], [1j, 0]], dtype=complex),
    3: np.array([[1, 0], [0, -1]], dtype=complex),
}

#: which Pauli each basis index alpha corresponds to under the Z-first ordering
ALPHA_TO_PAULI = {1: 3, 2: 1, 3: 2}
