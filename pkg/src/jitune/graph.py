"""Undirected weighted graphs: ingestion, writers, edge holdout and components."""

from __future__ import annotations

import io
import logging
import math
import os
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import IO, Iterable, Sequence

import numpy as np
import scipy.sparse as sp

logger = logging.getLogger(__name__)


class GraphFormatError(ValueError):
    """Raised when an input file cannot be parsed into a graph."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class IngestStats:
    lines_read: int = 0
    loops_dropped: int = 0
    duplicates_merged: int = 0
    symmetrized: bool = False


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable undirected graph with dense integer node ids.

    Edges are stored once, canonically as ``src < dst``, sorted
    lexicographically. ``labels`` holds one frozenset per node and
    ``attributes`` a ``(node_count, k)`` array; both are optional.
    """

    node_count: int
    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray
    labels: tuple[frozenset, ...] | None = None
    attributes: np.ndarray | None = None
    names: tuple[str, ...] | None = None
    ingest: IngestStats | None = field(default=None, compare=False)

    @classmethod
    def from_edges(
        cls,
        node_count: int,
        edges: Iterable[Sequence],
        labels: Sequence[Iterable] | None = None,
        attributes: np.ndarray | None = None,
        names: Sequence[str] | None = None,
    ) -> "Graph":
        """Build a graph from ``(u, v)`` or ``(u, v, w)`` tuples.

        Self-loops are dropped and parallel edges merged by summing weights.
        """
        us, vs, ws = [], [], []
        for e in edges:
            us.append(int(e[0]))
            vs.append(int(e[1]))
            ws.append(float(e[2]) if len(e) > 2 else 1.0)
        graph, _ = _canonical(node_count, np.array(us, dtype=np.int64),
                              np.array(vs, dtype=np.int64),
                              np.array(ws, dtype=np.float64))
        if labels is not None:
            graph = replace(graph, labels=tuple(frozenset(int(x) for x in s) for s in labels))
        if attributes is not None:
            graph = replace(graph, attributes=_check_attributes(node_count, attributes))
        if names is not None:
            graph = replace(graph, names=tuple(str(n) for n in names))
        return graph

    @property
    def edge_count(self) -> int:
        return int(self.src.shape[0])

    @property
    def total_weight(self) -> float:
        return float(self.weight.sum())

    @property
    def edges(self) -> list[tuple[int, int, float]]:
        return list(zip(self.src.tolist(), self.dst.tolist(), self.weight.tolist()))

    @cached_property
    def adjacency_matrix(self) -> sp.csr_matrix:
        """Symmetric weighted adjacency in CSR form."""
        n = self.node_count
        rows = np.concatenate([self.src, self.dst])
        cols = np.concatenate([self.dst, self.src])
        vals = np.concatenate([self.weight, self.weight])
        mat = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
        mat.sort_indices()
        return mat

    @cached_property
    def neighbors(self) -> list[np.ndarray]:
        """Sorted neighbor ids per node."""
        a = self.adjacency_matrix
        return [a.indices[a.indptr[i]:a.indptr[i + 1]] for i in range(self.node_count)]

    @cached_property
    def degree(self) -> np.ndarray:
        return np.diff(self.adjacency_matrix.indptr)

    @cached_property
    def edge_set(self) -> frozenset[tuple[int, int]]:
        return frozenset(zip(self.src.tolist(), self.dst.tolist()))

    def has_edge(self, u: int, v: int) -> bool:
        if u > v:
            u, v = v, u
        return (u, v) in self.edge_set

    def edge_weight(self, u: int, v: int) -> float:
        return float(self.adjacency_matrix[u, v])

    def with_labels(self, labels: Sequence[Iterable] | None) -> "Graph":
        if labels is None:
            return replace(self, labels=None)
        if len(labels) != self.node_count:
            raise ValueError("one label set per node required")
        return replace(self, labels=tuple(frozenset(int(x) for x in s) for s in labels))

    def with_attributes(self, attributes: np.ndarray | None) -> "Graph":
        if attributes is None:
            return replace(self, attributes=None)
        return replace(self, attributes=_check_attributes(self.node_count, attributes))

    def with_edges(self, src: np.ndarray, dst: np.ndarray, weight: np.ndarray) -> "Graph":
        """Same nodes, labels and attributes with a different (canonical) edge set."""
        g, _ = _canonical(self.node_count, src, dst, weight)
        return replace(g, labels=self.labels, attributes=self.attributes, names=self.names)

    def same_as(self, other: "Graph") -> bool:
        """Structural equality including weights, labels and attributes."""
        if self.node_count != other.node_count:
            return False
        if not (np.array_equal(self.src, other.src) and np.array_equal(self.dst, other.dst)
                and np.array_equal(self.weight, other.weight)):
            return False
        if self.labels != other.labels:
            return False
        if (self.attributes is None) != (other.attributes is None):
            return False
        if self.attributes is not None and not np.array_equal(self.attributes, other.attributes):
            return False
        return True

    def check_invariants(self) -> None:
        assert np.all(self.src < self.dst), "canonical orientation"
        assert np.all(self.weight > 0)
        assert self.src.size == 0 or (self.src.min() >= 0 and self.dst.max() < self.node_count)
        keys = self.src * max(self.node_count, 1) + self.dst
        assert np.all(np.diff(keys) > 0), "edges sorted and unique"
        if self.attributes is not None:
            assert self.attributes.shape[0] == self.node_count
        if self.labels is not None:
            assert len(self.labels) == self.node_count


def _check_attributes(node_count: int, attributes) -> np.ndarray:
    x = np.asarray(attributes, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] != node_count:
        raise ValueError(f"attributes must have shape ({node_count}, k), got {x.shape}")
    return x


def _canonical(node_count, us, vs, ws) -> tuple[Graph, IngestStats]:
    us = np.asarray(us, dtype=np.int64)
    vs = np.asarray(vs, dtype=np.int64)
    ws = np.asarray(ws, dtype=np.float64)
    if us.size and (min(us.min(), vs.min()) < 0 or max(us.max(), vs.max()) >= node_count):
        raise ValueError("edge endpoint out of range")
    loops = us == vs
    n_loops = int(loops.sum())
    us, vs, ws = us[~loops], vs[~loops], ws[~loops]
    lo = np.minimum(us, vs)
    hi = np.maximum(us, vs)
    keys = lo * max(node_count, 1) + hi
    uniq, inverse = np.unique(keys, return_inverse=True)
    merged = np.zeros(uniq.shape[0], dtype=np.float64)
    # sequential accumulation keeps summation order equal to input order
    np.add.at(merged, inverse, ws)
    src = (uniq // max(node_count, 1)).astype(np.int64)
    dst = (uniq % max(node_count, 1)).astype(np.int64)
    graph = Graph(node_count, src, dst, merged)
    stats = IngestStats(loops_dropped=n_loops, duplicates_merged=int(keys.size - uniq.size))
    return graph, stats


def _lines(source) -> Iterable[tuple[int, list[str]]]:
    """Yield ``(line number, fields)`` for non-comment lines.

    ``source`` is a path, bytes, or a text/binary stream.
    """
    if isinstance(source, (str, os.PathLike)):
        with open(source, encoding="utf-8") as fh:
            yield from _lines(fh)
        return
    if isinstance(source, (bytes, bytearray)):
        source = io.StringIO(source.decode("utf-8"))
    for lineno, raw in enumerate(source, start=1):
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8")
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        yield lineno, line.split()


def load_edge_list(source, directed: bool = False, num_nodes: int | None = None) -> Graph:
    """Parse an edge list (``u v`` or ``u v w`` per line).

    ``source`` may be a path, bytes, or a text/binary stream. When every node token is a non-negative integer the
    tokens are used as ids directly; otherwise tokens are interned to dense
    ids in order of first appearance and kept in ``Graph.names``.
    """
    raw_u, raw_v, ws = [], [], []
    lines_read = 0
    for lineno, fields in _lines(source):
        lines_read += 1
        if len(fields) not in (2, 3):
            raise GraphFormatError(f"expected 'u v' or 'u v w', got {len(fields)} fields", lineno)
        w = 1.0
        if len(fields) == 3:
            try:
                w = float(fields[2])
            except ValueError:
                raise GraphFormatError(f"non-numeric weight {fields[2]!r}", lineno) from None
            if not w > 0 or not math.isfinite(w):
                raise GraphFormatError(f"weight must be positive and finite, got {fields[2]}", lineno)
        raw_u.append(fields[0])
        raw_v.append(fields[1])
        ws.append(w)
    if lines_read == 0:
        raise GraphFormatError("empty edge list")

    tokens = raw_u + raw_v
    names = None
    if all(t.isdigit() for t in tokens):
        ids = [int(t) for t in tokens]
        n = max(ids) + 1
    else:
        index: dict[str, int] = {}
        ids = [index.setdefault(t, len(index)) for t in tokens]
        n = len(index)
        names = tuple(index)
    if num_nodes is not None:
        if num_nodes < n:
            raise GraphFormatError(f"num_nodes={num_nodes} smaller than largest id + 1 ({n})")
        n = num_nodes
    m = len(raw_u)
    us = np.array(ids[:m], dtype=np.int64)
    vs = np.array(ids[m:], dtype=np.int64)
    if directed:
        logger.warning("directed input symmetrized; reciprocal arcs merge by summing weights")
    graph, stats = _canonical(n, us, vs, np.array(ws))
    stats = replace(stats, lines_read=lines_read, symmetrized=directed)
    if stats.loops_dropped:
        logger.info("dropped %d self-loops", stats.loops_dropped)
    return replace(graph, names=names, ingest=stats)


def _node_index(graph: Graph) -> dict[str, int] | None:
    if graph.names is None:
        return None
    return {name: i for i, name in enumerate(graph.names)}


def _resolve(token: str, graph: Graph, index: dict[str, int] | None, lineno: int) -> int:
    if index is not None:
        if token not in index:
            raise GraphFormatError(f"unknown node {token!r}", lineno)
        return index[token]
    try:
        node = int(token)
    except ValueError:
        raise GraphFormatError(f"non-integer node id {token!r}", lineno) from None
    if not 0 <= node < graph.node_count:
        raise GraphFormatError(f"node {node} out of range [0, {graph.node_count})", lineno)
    return node


def attach_labels(graph: Graph, source) -> Graph:
    """Read ``node label`` lines; a node may carry several labels."""
    index = _node_index(graph)
    sets: list[set[int]] = [set() for _ in range(graph.node_count)]
    for lineno, fields in _lines(source):
        if len(fields) != 2:
            raise GraphFormatError("expected 'node label'", lineno)
        node = _resolve(fields[0], graph, index, lineno)
        try:
            label = int(fields[1])
        except ValueError:
            raise GraphFormatError(f"non-integer label {fields[1]!r}", lineno) from None
        sets[node].add(label)
    return graph.with_labels(sets)


def attach_attributes(graph: Graph, source) -> Graph:
    """Read ``node f1 ... fk`` lines; every node must be covered."""
    index = _node_index(graph)
    rows: dict[int, list[float]] = {}
    dim = None
    for lineno, fields in _lines(source):
        node = _resolve(fields[0], graph, index, lineno)
        try:
            vec = [float(x) for x in fields[1:]]
        except ValueError:
            raise GraphFormatError("non-numeric attribute field", lineno) from None
        if dim is None:
            dim = len(vec)
        elif len(vec) != dim:
            raise GraphFormatError(f"attribute dimension {len(vec)} != {dim}", lineno)
        rows[node] = vec
    missing = [v for v in range(graph.node_count) if v not in rows]
    if missing:
        raise GraphFormatError(f"{len(missing)} node(s) lack attributes, first: {missing[0]}")
    return graph.with_attributes(np.array([rows[v] for v in range(graph.node_count)]))


def _node_token(graph: Graph, v: int) -> str:
    return graph.names[v] if graph.names is not None else str(v)


def write_edge_list(graph: Graph, dest: IO[str]) -> None:
    for u, v, w in graph.edges:
        dest.write(f"{_node_token(graph, u)} {_node_token(graph, v)} {w!r}\n")


def write_labels(graph: Graph, dest: IO[str]) -> None:
    if graph.labels is None:
        return
    for v, labels in enumerate(graph.labels):
        for label in sorted(labels):
            dest.write(f"{_node_token(graph, v)} {label}\n")


def write_attributes(graph: Graph, dest: IO[str]) -> None:
    if graph.attributes is None:
        return
    for v, row in enumerate(graph.attributes.tolist()):
        dest.write(_node_token(graph, v) + " " + " ".join(repr(x) for x in row) + "\n")


def save_graph(graph: Graph, edges_path, labels_path=None, attrs_path=None) -> None:
    with open(edges_path, "w", encoding="utf-8") as fh:
        write_edge_list(graph, fh)
    if labels_path is not None and graph.labels is not None:
        with open(labels_path, "w", encoding="utf-8") as fh:
            write_labels(graph, fh)
    if attrs_path is not None and graph.attributes is not None:
        with open(attrs_path, "w", encoding="utf-8") as fh:
            write_attributes(graph, fh)


@dataclass(frozen=True, eq=False)
class EdgeSplit:
    train_graph: Graph
    test_positive: np.ndarray
    test_negative: np.ndarray
    holdout_fraction: float
    seed: int


def split_edges(graph: Graph, holdout_fraction: float = 0.2, seed: int = 0) -> EdgeSplit:
    """Hold out a random fraction of edges plus as many sampled non-edges."""
    if not 0 < holdout_fraction < 1:
        raise ValueError("holdout_fraction must lie in (0, 1)")
    m = graph.edge_count
    if m < math.ceil(1 / holdout_fraction):
        raise ValueError(f"graph has {m} edges, need at least {math.ceil(1 / holdout_fraction)}")
    n = graph.node_count
    k = int(round(holdout_fraction * m))
    non_edges = n * (n - 1) // 2 - m
    if non_edges < k:
        raise ValueError(f"only {non_edges} non-edges available, {k} negatives requested")

    rng = np.random.default_rng(seed)
    held = np.sort(rng.choice(m, size=k, replace=False))
    keep = np.ones(m, dtype=bool)
    keep[held] = False
    positive = np.stack([graph.src[held], graph.dst[held]], axis=1)

    edges = graph.edge_set
    chosen: set[tuple[int, int]] = set()
    negative = []
    while len(negative) < k:
        u, v = (int(x) for x in rng.integers(0, n, size=2))
        if u == v:
            continue
        if u > v:
            u, v = v, u
        if (u, v) in edges or (u, v) in chosen:
            continue
        chosen.add((u, v))
        negative.append((u, v))
    negative = np.array(negative, dtype=np.int64).reshape(-1, 2)

    train = replace(graph, src=graph.src[keep], dst=graph.dst[keep], weight=graph.weight[keep],
                    ingest=None)
    return EdgeSplit(train, positive, negative, holdout_fraction, seed)


def connected_components(graph: Graph) -> tuple[int, np.ndarray]:
    from scipy.sparse.csgraph import connected_components as _cc

    if graph.node_count == 0:
        return 0, np.zeros(0, dtype=np.int64)
    count, assignment = _cc(graph.adjacency_matrix, directed=False)
    return int(count), assignment.astype(np.int64)
