import numpy as np
import pytest

from jitune.graph import Graph


def erdos_renyi(n, p, seed):
    rng = np.random.default_rng(seed)
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(len(iu)) < p
    return Graph.from_edges(n, zip(iu[keep].tolist(), ju[keep].tolist()))


def sbm(sizes, p_in, p_out, seed):
    rng = np.random.default_rng(seed)
    n = sum(sizes)
    block = np.repeat(np.arange(len(sizes)), sizes)
    iu, ju = np.triu_indices(n, 1)
    prob = np.where(block[iu] == block[ju], p_in, p_out)
    keep = rng.random(len(iu)) < prob
    graph = Graph.from_edges(n, zip(iu[keep].tolist(), ju[keep].tolist()))
    return graph.with_labels([{int(b)} for b in block])


def path(n):
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


@pytest.fixture(scope="session")
def sbm_small():
    return sbm([60, 60], 0.15, 0.01, seed=3)
