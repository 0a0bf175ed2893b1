import numpy as np
import pytest

from spectralgap.graphs import build_graph


def er_graph(n, p, rng):
    iu, ju = np.triu_indices(n, 1)
    mask = rng.random(iu.shape[0]) < p
    return build_graph(n, np.stack([iu[mask], ju[mask]], axis=1))


def complete_graph(n):
    return build_graph(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def star_graph(n):
    return build_graph(n, [(0, i) for i in range(1, n)])


def path_graph(n):
    return build_graph(n, [(i, i + 1) for i in range(n - 1)])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
