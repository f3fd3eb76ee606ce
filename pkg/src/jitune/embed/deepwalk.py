"""DeepWalk: truncated uniform random walks + skip-gram with negative sampling."""

from __future__ import annotations

import numba
import numpy as np

from ..graph import Graph
from ..space import HyperparameterSpace, Numeric
from .base import Embedder, EmbedderDescriptor

NEGATIVES = 5
START_LR = 0.025
MIN_LR_FRACTION = 1e-4

DEEPWALK_SPACE = HyperparameterSpace((
    Numeric("num_walks", 40, 100, integer=True),
    Numeric("walk_length", 20, 80, integer=True),
    Numeric("window", 5, 30, integer=True),
    Numeric("dim", 40, 256, integer=True),
))


@numba.njit(cache=True)
def _walks(indptr, indices, num_walks, walk_length, seed):
    np.random.seed(seed)
    n = indptr.shape[0] - 1
    walks = np.full((num_walks * n, walk_length), -1, dtype=np.int64)
    lengths = np.zeros(num_walks * n, dtype=np.int64)
    order = np.arange(n)
    row = 0
    for _ in range(num_walks):
        np.random.shuffle(order)
        for start in order:
            cur = start
            walks[row, 0] = cur
            length = 1
            while length < walk_length:
                lo = indptr[cur]
                deg = indptr[cur + 1] - lo
                if deg == 0:
                    break
                cur = indices[lo + np.random.randint(deg)]
                walks[row, length] = cur
                length += 1
            lengths[row] = length
            row += 1
    return walks, lengths


@numba.njit(cache=True)
def _skipgram(walks, lengths, n, dim, window, negatives, table, start_lr, min_lr, seed):
    np.random.seed(seed)
    emb = (np.random.random((n, dim)) - 0.5) / dim
    ctx = np.zeros((n, dim))
    total = 0
    for w in range(walks.shape[0]):
        total += lengths[w]
    done = 0
    grad = np.zeros(dim)
    for w in range(walks.shape[0]):
        length = lengths[w]
        for i in range(length):
            lr = start_lr * (1.0 - done / (total + 1.0))
            if lr < start_lr * min_lr:
                lr = start_lr * min_lr
            done += 1
            center = walks[w, i]
            lo = max(0, i - window)
            hi = min(length, i + window + 1)
            for j in range(lo, hi):
                if j == i:
                    continue
                target = walks[w, j]
                grad[:] = 0.0
                for k in range(negatives + 1):
                    if k == 0:
                        node = target
                        label = 1.0
                    else:
                        node = table[np.random.randint(table.shape[0])]
                        if node == target:
                            continue
                        label = 0.0
                    dot = 0.0
                    for t in range(dim):
                        dot += emb[center, t] * ctx[node, t]
                    if dot > 6.0:
                        sig = 1.0
                    elif dot < -6.0:
                        sig = 0.0
                    else:
                        sig = 1.0 / (1.0 + np.exp(-dot))
                    g = (label - sig) * lr
                    for t in range(dim):
                        grad[t] += g * ctx[node, t]
                        ctx[node, t] += g * emb[center, t]
                for t in range(dim):
                    emb[center, t] += grad[t]
    return emb


def generate_walks(graph: Graph, num_walks: int, walk_length: int, seed: int = 0
                   ) -> tuple[np.ndarray, np.ndarray]:
    """Return a ``(num_walks * |V|, walk_length)`` array padded with -1, and walk lengths."""
    a = graph.adjacency_matrix
    return _walks(a.indptr.astype(np.int64), a.indices.astype(np.int64),
                  int(num_walks), int(walk_length), _seed32(seed))


def _noise_table(walks: np.ndarray, lengths: np.ndarray, n: int, size: int = 1_000_000) -> np.ndarray:
    counts = np.bincount(walks[walks >= 0], minlength=n).astype(np.float64)
    probs = counts ** 0.75
    if probs.sum() == 0:
        probs = np.ones(n)
    probs /= probs.sum()
    size = min(size, max(100 * n, 1000))
    return np.repeat(np.arange(n), np.round(probs * size).astype(np.int64))


def _seed32(seed: int) -> int:
    return int(np.random.SeedSequence(seed).generate_state(1)[0] & 0x7FFFFFFF)


def deepwalk_embed(graph: Graph, num_walks: int, walk_length: int, window: int, dim: int,
                   seed: int = 0) -> np.ndarray:
    if graph.node_count == 0:
        raise ValueError("empty graph")
    if dim < 1:
        raise ValueError("dim must be at least 1")
    walks, lengths = generate_walks(graph, num_walks, walk_length, seed)
    table = _noise_table(walks, lengths, graph.node_count)
    if table.size == 0:
        table = np.arange(graph.node_count)
    return _skipgram(walks, lengths, graph.node_count, int(dim), int(window), NEGATIVES,
                     table, START_LR, MIN_LR_FRACTION, _seed32(seed + 1))


class DeepWalk(Embedder):
    descriptor = EmbedderDescriptor("deepwalk", DEEPWALK_SPACE, "VlogV")
    defaults = {"num_walks": 10, "walk_length": 40, "window": 5, "dim": 64}

    def embed(self, graph, config, seed=0):
        return deepwalk_embed(graph, int(config["num_walks"]), int(config["walk_length"]),
                              int(config["window"]), int(config["dim"]), seed)
