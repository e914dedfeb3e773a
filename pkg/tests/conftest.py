import numpy as np
import pytest

from poladca.graphio import GraphSample, PreprocessConfig, build_knn_graph


def random_graph(rng, n, D, k=None):
    x = rng.standard_normal((n, D))
    k = k if k is not None else int(rng.integers(1, n))
    return GraphSample(x, build_knn_graph(x, k), 0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session")
def small_pre():
    return PreprocessConfig(window_len=200, stride=100, k=4, segment_count=10)
