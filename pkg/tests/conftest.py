import numpy as np
import pytest

from coupled_netgame import GameParams, load_network

STD = GameParams(0.2, 0.1, 0.01)


@pytest.fixture
def std_params():
    return STD


@pytest.fixture
def path2():
    return load_network([(0, 1)], 2)


@pytest.fixture
def path3():
    return load_network([(0, 1), (1, 2)], 3)


@pytest.fixture
def k4():
    return load_network([(i, j) for i in range(4) for j in range(i + 1, 4)], 4)


@pytest.fixture
def single():
    return load_network([], 1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
