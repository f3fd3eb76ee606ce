from __future__ import annotations

import math
from dataclasses import dataclass
from typing import IO, Any, Callable, Mapping

import numpy as np

from ..graph import Graph, GraphFormatError
from ..space import HyperparameterSpace

COMPLEXITY_CLASSES = ("VlogV", "E_plus_V", "E")


class EmbeddingError(RuntimeError):
    """An embedder failed to produce a valid matrix."""


@dataclass(frozen=True)
class EmbedderDescriptor:
    name: str
    space: HyperparameterSpace
    complexity_class: str
    kind: str = "native"

    def __post_init__(self):
        if self.complexity_class not in COMPLEXITY_CLASSES:
            raise ValueError(f"unknown complexity class {self.complexity_class!r}")
        if not self.space.dims:
            raise ValueError("embedder search space is empty")


class Embedder:
    """Base class: ``embed(graph, config, seed)`` returns a ``|V| x d`` array."""

    descriptor: EmbedderDescriptor
    defaults: Mapping[str, Any] = {}

    def embed(self, graph: Graph, config: Mapping[str, Any], seed: int = 0) -> np.ndarray:
        raise NotImplementedError

    def __call__(self, graph: Graph, config: Mapping[str, Any], seed: int = 0) -> np.ndarray:
        merged = {**self.defaults, **config}
        out = self.embed(graph, merged, seed)
        return check_embedding(out, graph.node_count)

    @property
    def name(self) -> str:
        return self.descriptor.name


class FunctionEmbedder(Embedder):
    """Wrap a plain callable ``fn(graph, config, seed)`` as an embedder."""

    def __init__(self, descriptor: EmbedderDescriptor, fn: Callable[..., np.ndarray],
                 defaults: Mapping[str, Any] | None = None):
        self.descriptor = descriptor
        self.fn = fn
        self.defaults = dict(defaults or {})

    def embed(self, graph, config, seed=0):
        return self.fn(graph, config, seed)


def check_embedding(matrix, node_count: int) -> np.ndarray:
    x = np.asarray(matrix, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != node_count:
        raise EmbeddingError(f"expected {node_count} embedding rows, got shape {x.shape}")
    if x.shape[1] < 1:
        raise EmbeddingError("embedding dimension must be at least 1")
    if not np.all(np.isfinite(x)):
        raise EmbeddingError("embedding contains non-finite entries")
    return x


def _nlogn(n: int) -> float:
    # n log n with log clamped at log 2 so single-node synopses keep a positive cost
    return n * math.log(max(n, 2))


def runtime_ratio(descriptor: EmbedderDescriptor, original: Graph, synopsis: Graph) -> float:
    """Predicted runtime of the embedder on ``synopsis`` relative to ``original``."""
    cls = descriptor.complexity_class
    if cls == "VlogV":
        rho = _nlogn(synopsis.node_count) / _nlogn(original.node_count)
    elif cls == "E_plus_V":
        rho = (synopsis.edge_count + synopsis.node_count) / (original.edge_count + original.node_count)
    else:
        rho = synopsis.edge_count / original.edge_count if original.edge_count else 1.0
        # an edgeless synopsis still costs something to run
        rho = max(rho, 1.0 / max(original.edge_count, 1))
    return min(max(rho, 1e-12), 1.0)


def write_embedding(matrix: np.ndarray, dest: IO[str]) -> None:
    for v, row in enumerate(np.asarray(matrix, dtype=np.float64).tolist()):
        dest.write(f"{v} " + " ".join(repr(x) for x in row) + "\n")


def save_embedding(matrix: np.ndarray, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        write_embedding(matrix, fh)


def load_embedding(path, node_count: int | None = None) -> np.ndarray:
    """Read ``node v1 ... vd`` lines; rows may appear in any order."""
    rows: dict[int, list[float]] = {}
    dim = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.split()
            try:
                node = int(fields[0])
                vec = [float(x) for x in fields[1:]]
            except ValueError:
                raise GraphFormatError("malformed embedding row", lineno) from None
            if dim is None:
                dim = len(vec)
            if len(vec) != dim or dim == 0:
                raise GraphFormatError(f"row has {len(vec)} values, expected {dim}", lineno)
            if node in rows:
                raise GraphFormatError(f"duplicate row for node {node}", lineno)
            rows[node] = vec
    n = node_count if node_count is not None else (max(rows) + 1 if rows else 0)
    missing = [v for v in range(n) if v not in rows]
    if missing or len(rows) != n:
        raise GraphFormatError(f"embedding covers {len(rows)} of {n} nodes")
    return np.array([rows[v] for v in range(n)], dtype=np.float64)
