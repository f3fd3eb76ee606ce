"""Hierarchical graph synopses.

Each level groups nodes (star pass, then edge pass; or structural
equivalence then attribute similarity for attributed graphs), collapses
every group into one node and merges the incident edge weights. A chain of
levels is grown until the node-count ratio against the original graph
drops below a threshold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .graph import Graph

__all__ = [
    "Synopsis",
    "ExtendedSynopsis",
    "SynopsisChain",
    "star_collapse",
    "edge_collapse",
    "coarsen_level",
    "equivalence_collapse",
    "build_chain",
    "similarity",
    "extend_synopsis",
    "kl_divergence",
    "lift_embeddings",
    "identity_synopsis",
    "save_synopsis",
    "load_synopsis",
]


@dataclass(frozen=True, eq=False)
class Synopsis:
    """A coarsened graph and the map from original node ids onto it.

    ``projection[v]`` is the synopsis node holding original node ``v``.
    ``delta_w`` is the weight of edges that became internal to a collapsed
    node when this level was built from its parent.
    """

    graph: Graph
    projection: np.ndarray
    level: int
    alpha: float
    parent_node_count: int
    delta_w: float = 0.0

    @property
    def node_count(self) -> int:
        return self.graph.node_count

    def member_counts(self) -> np.ndarray:
        return np.bincount(self.projection, minlength=self.graph.node_count)


@dataclass(frozen=True, eq=False)
class ExtendedSynopsis:
    graph: Graph
    mirror_of: dict[int, int]
    extended_total_weight: float
    synopsis: Synopsis


@dataclass(frozen=True, eq=False)
class SynopsisChain:
    levels: list[Synopsis]
    threshold: float
    selected: int
    original_node_count: int = 0
    stop_reason: str = ""

    @property
    def selected_synopsis(self) -> Synopsis:
        return self.levels[self.selected]

    def __len__(self) -> int:
        return len(self.levels)


# -- grouping passes ---------------------------------------------------------


def star_collapse(graph: Graph) -> dict[int, int]:
    """Pair nodes that hang off a common, still-unmatched neighbor.

    Nodes are visited in ascending id order; each unmatched node is paired
    with the lowest-id unmatched node reachable through an unmatched shared
    neighbor. Returns a symmetric ``node -> partner`` map.
    """
    nbrs = graph.neighbors
    n = graph.node_count
    matched = np.zeros(n, dtype=bool)
    # ptr[w] indexes the first possibly-unmatched entry of nbrs[w]
    ptr = np.zeros(n, dtype=np.int64)
    pairing: dict[int, int] = {}

    def lowest_unmatched(w: int, exclude: int) -> int:
        row = nbrs[w]
        i = ptr[w]
        while i < row.size and matched[row[i]]:
            i += 1
        ptr[w] = i
        while i < row.size:
            x = row[i]
            if not matched[x] and x != exclude:
                return int(x)
            i += 1
        return -1

    for u in range(n):
        if matched[u]:
            continue
        best = -1
        for w in nbrs[u]:
            if matched[w]:
                continue
            cand = lowest_unmatched(int(w), u)
            if cand >= 0 and (best < 0 or cand < best):
                best = cand
        if best >= 0:
            matched[u] = matched[best] = True
            pairing[u] = best
            pairing[best] = u
    return pairing


def edge_collapse(graph: Graph, already_matched=()) -> dict[int, int]:
    """Pair endpoints of edges, scanned in ascending ``(u, v)`` order."""
    taken = np.zeros(graph.node_count, dtype=bool)
    taken[list(already_matched)] = True
    pairing: dict[int, int] = {}
    for u, v in zip(graph.src.tolist(), graph.dst.tolist()):
        if not taken[u] and not taken[v]:
            taken[u] = taken[v] = True
            pairing[u] = v
            pairing[v] = u
    return pairing


# -- collapsing --------------------------------------------------------------


def _groups_from_pairing(n: int, pairing: dict[int, int]) -> np.ndarray:
    """Group id per node; ids ordered by each group's smallest member."""
    assign = np.full(n, -1, dtype=np.int64)
    nxt = 0
    for v in range(n):
        if assign[v] >= 0:
            continue
        assign[v] = nxt
        p = pairing.get(v)
        if p is not None:
            assign[p] = nxt
        nxt += 1
    return assign


def _relabel_groups(group_key: np.ndarray) -> np.ndarray:
    """Renumber arbitrary group keys by first appearance in node order."""
    mapping: dict[int, int] = {}
    return np.array([mapping.setdefault(int(k), len(mapping)) for k in group_key], dtype=np.int64)


def _merge_labels(graph: Graph, assign: np.ndarray, k: int, rng: np.random.Generator):
    if graph.labels is None:
        return None
    members: list[list[int]] = [[] for _ in range(k)]
    for v, g in enumerate(assign.tolist()):
        members[g].append(v)
    out = []
    for group in members:
        sets = [graph.labels[v] for v in group]
        if all(s == sets[0] for s in sets):
            out.append(sets[0])
            continue
        pool = sorted(set().union(*sets))
        out.append(frozenset([pool[int(rng.integers(len(pool)))]]) if pool else frozenset())
    return out


def _collapse(graph: Graph, assign: np.ndarray, seed: int) -> tuple[Graph, float]:
    """Contract ``graph`` along ``assign``; returns the synopsis graph and ΔW."""
    k = int(assign.max()) + 1 if assign.size else 0
    a = assign[graph.src]
    b = assign[graph.dst]
    internal = a == b
    delta_w = float(graph.weight[internal].sum())
    coarse = Graph.from_edges(k, [])
    coarse = coarse.with_edges(a[~internal], b[~internal], graph.weight[~internal])
    rng = np.random.default_rng(seed)
    labels = _merge_labels(graph, assign, k, rng)
    if labels is not None:
        coarse = coarse.with_labels(labels)
    if graph.attributes is not None:
        counts = np.bincount(assign, minlength=k).astype(np.float64)
        sums = np.zeros((k, graph.attributes.shape[1]))
        np.add.at(sums, assign, graph.attributes)
        coarse = coarse.with_attributes(sums / counts[:, None])
    return coarse, delta_w


def coarsen_level(graph: Graph, seed: int = 0) -> Synopsis | None:
    """One star-then-edge coarsening step.

    Returns ``None`` when no pair can be formed, i.e. the graph is stable
    under collapsing and a chain built on it must stop.
    """
    if graph.node_count < 2:
        raise ValueError("coarsening needs at least 2 nodes")
    star = star_collapse(graph)
    edge = edge_collapse(graph, star.keys())
    pairing = {**star, **edge}
    if not pairing:
        return None
    assign = _groups_from_pairing(graph.node_count, pairing)
    coarse, delta_w = _collapse(graph, assign, seed)
    return Synopsis(coarse, assign, 1, coarse.node_count / graph.node_count,
                    graph.node_count, delta_w)


def _cosine(x: np.ndarray, y: np.ndarray) -> float:
    nx_, ny = np.linalg.norm(x), np.linalg.norm(y)
    if nx_ == 0 or ny == 0:
        return 0.0
    return float(np.dot(x, y) / (nx_ * ny))


def equivalence_collapse(graph: Graph, cosine_threshold: float = 0.9,
                         seed: int = 0) -> Synopsis | None:
    """Attributed coarsening step.

    Nodes with identical non-empty neighbor sets are grouped first; the
    remaining nodes are then paired along edges (ascending order) when their
    attribute vectors have cosine similarity at least ``cosine_threshold``.
    Collapsed nodes take the mean attribute vector of their members.
    """
    if graph.attributes is None:
        raise ValueError("equivalence_collapse needs node attributes")
    if graph.node_count < 2:
        raise ValueError("coarsening needs at least 2 nodes")
    n = graph.node_count
    key = np.arange(n, dtype=np.int64)
    grouped = np.zeros(n, dtype=bool)
    seen: dict[tuple[int, ...], int] = {}
    for v, row in enumerate(graph.neighbors):
        if row.size == 0:
            continue
        sig = tuple(row.tolist())
        if sig in seen:
            key[v] = seen[sig]
            grouped[v] = grouped[seen[sig]] = True
        else:
            seen[sig] = v
    x = graph.attributes
    for u, v in zip(graph.src.tolist(), graph.dst.tolist()):
        if grouped[u] or grouped[v]:
            continue
        if _cosine(x[u], x[v]) >= cosine_threshold:
            key[v] = key[u]
            grouped[u] = grouped[v] = True
    if not grouped.any():
        return None
    assign = _relabel_groups(key)
    coarse, delta_w = _collapse(graph, assign, seed)
    return Synopsis(coarse, assign, 1, coarse.node_count / n, n, delta_w)


# -- chain -------------------------------------------------------------------


def similarity(synopsis: Synopsis | Graph, original: Graph) -> float:
    """Node-count ratio |V'| / |V|."""
    n_syn = synopsis.node_count
    return n_syn / original.node_count


def build_chain(graph: Graph, threshold: float = 0.5, attributed: bool = False,
                seed: int = 0, cosine_threshold: float = 0.9,
                max_levels: int | None = None) -> SynopsisChain:
    """Coarsen repeatedly until the ratio to the original drops below ``threshold``.

    The last level generated may sit below the threshold; ``selected``
    points at the deepest level that does not (level 1 when none do).
    """
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    if graph.node_count < 2:
        raise ValueError("coarsening needs at least 2 nodes")
    levels: list[Synopsis] = []
    current = graph
    projection = np.arange(graph.node_count, dtype=np.int64)
    stop = "threshold"
    seeds = np.random.SeedSequence(seed)
    while True:
        level_seed = int(seeds.spawn(1)[0].generate_state(1)[0])
        if current.node_count < 2:
            stop = "single node"
            break
        if attributed:
            step = equivalence_collapse(current, cosine_threshold, level_seed)
        else:
            step = coarsen_level(current, level_seed)
        if step is None or step.node_count >= current.node_count:
            stop = "no shrink"
            break
        projection = step.projection[projection]
        alpha = step.node_count / graph.node_count
        levels.append(Synopsis(step.graph, projection, len(levels) + 1, alpha,
                               current.node_count, step.delta_w))
        current = step.graph
        if alpha < threshold:
            break
        if max_levels is not None and len(levels) >= max_levels:
            stop = "max levels"
            break
    if not levels:
        raise ValueError("graph cannot be coarsened: no groupable nodes")
    admissible = [i for i, s in enumerate(levels) if s.alpha >= threshold]
    selected = admissible[-1] if admissible else 0
    return SynopsisChain(levels, threshold, selected, graph.node_count, stop)


def identity_synopsis(graph: Graph) -> Synopsis:
    return Synopsis(graph, np.arange(graph.node_count, dtype=np.int64), 0, 1.0,
                    graph.node_count, 0.0)


# -- mirror extension and KL diagnostic --------------------------------------


def extend_synopsis(synopsis: Synopsis, original: Graph) -> ExtendedSynopsis:
    """Add k-1 unit-weight mirror nodes to every node that absorbed k originals."""
    if synopsis.projection.shape[0] != original.node_count:
        raise ValueError("synopsis projection does not cover the original graph")
    g = synopsis.graph
    counts = synopsis.member_counts()
    mirror_of: dict[int, int] = {}
    extra_src, extra_dst = [], []
    nxt = g.node_count
    for c in range(g.node_count):
        for _ in range(int(counts[c]) - 1):
            mirror_of[nxt] = c
            extra_src.append(c)
            extra_dst.append(nxt)
            nxt += 1
    n_x = nxt
    src = np.concatenate([g.src, np.array(extra_src, dtype=np.int64)])
    dst = np.concatenate([g.dst, np.array(extra_dst, dtype=np.int64)])
    w = np.concatenate([g.weight, np.ones(len(extra_src))])
    ext = Graph.from_edges(n_x, []).with_edges(src, dst, w)
    w_x = g.total_weight + (original.node_count - g.node_count)
    if n_x != original.node_count:
        raise AssertionError(f"extended graph has {n_x} nodes, expected {original.node_count}")
    return ExtendedSynopsis(ext, mirror_of, w_x, synopsis)


def kl_divergence(original: Graph, extended: ExtendedSynopsis, epsilon: float = 1.0) -> float:
    """KL divergence between edge-weight distributions of G and its extended synopsis.

    The sum runs over original edges. Each original edge takes its
    weight-proportional share of the image edge (cross edges) or of the
    mirror weight of the node it collapsed into (internal edges), so the
    compared masses sum to at most one. An image edge missing from the
    synopsis gets ``epsilon`` weight.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    syn = extended.synopsis
    pi = syn.projection
    w_total = original.total_weight
    w_x = extended.extended_total_weight
    if w_total == 0:
        return 0.0
    a = pi[original.src]
    b = pi[original.dst]
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    w = original.weight
    counts = syn.member_counts()

    # original weight landing on each image edge / collapsed node
    image_mass: dict[tuple[int, int], float] = {}
    for x, y, wt in zip(lo.tolist(), hi.tolist(), w.tolist()):
        image_mass[(x, y)] = image_mass.get((x, y), 0.0) + wt

    total = 0.0
    for x, y, wt in zip(lo.tolist(), hi.tolist(), w.tolist()):
        p = wt / w_total
        if x == y:
            image = float(counts[x] - 1)
        else:
            image = syn.graph.edge_weight(x, y) if syn.graph.has_edge(x, y) else 0.0
        if image > 0:
            q = image * (wt / image_mass[(x, y)]) / w_x
        else:
            q = epsilon / w_x
        total += p * math.log(p / q)
    if -1e-12 < total < 0:
        total = 0.0
    return total


def lift_embeddings(synopsis_embeddings: np.ndarray, projection: Sequence[int],
                    epsilon_scale: float = 0.0, seed: int = 0) -> np.ndarray:
    """Copy each synopsis row to its original nodes plus uniform noise in [-eps, eps]."""
    emb = np.asarray(synopsis_embeddings, dtype=np.float64)
    pi = np.asarray(projection, dtype=np.int64)
    if emb.ndim != 2:
        raise ValueError("embeddings must be a 2-D matrix")
    if pi.size and (pi.min() < 0 or pi.max() >= emb.shape[0]):
        raise ValueError("projection refers to rows missing from the synopsis embedding")
    out = emb[pi].copy()
    if epsilon_scale > 0:
        rng = np.random.default_rng(seed)
        out += rng.uniform(-epsilon_scale, epsilon_scale, size=out.shape)
    return out


# -- serialization -----------------------------------------------------------


def save_synopsis(synopsis: Synopsis, edges_path, projection_path) -> None:
    from .graph import write_edge_list

    with open(edges_path, "w", encoding="utf-8") as fh:
        write_edge_list(synopsis.graph, fh)
    with open(projection_path, "w", encoding="utf-8") as fh:
        fh.write(f"# level={synopsis.level} alpha={synopsis.alpha!r} "
                 f"parent_nodes={synopsis.parent_node_count} delta_w={synopsis.delta_w!r} "
                 f"nodes={synopsis.node_count}\n")
        for v, c in enumerate(synopsis.projection.tolist()):
            fh.write(f"{v} {c}\n")


def load_synopsis(edges_path, projection_path) -> Synopsis:
    from .graph import load_edge_list

    meta: dict[str, str] = {}
    pairs = []
    with open(projection_path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line.startswith("#"):
                meta.update(tok.split("=", 1) for tok in line[1:].split() if "=" in tok)
            elif line:
                v, c = line.split()
                pairs.append((int(v), int(c)))
    projection = np.zeros(len(pairs), dtype=np.int64)
    for v, c in pairs:
        projection[v] = c
    n = int(meta.get("nodes", projection.max() + 1 if projection.size else 0))
    with open(edges_path, "rb") as fh:
        data = fh.read()
    graph = load_edge_list(data, num_nodes=n) if data.strip() else Graph.from_edges(n, [])
    graph = Graph(graph.node_count, graph.src, graph.dst, graph.weight)
    return Synopsis(graph, projection, int(meta.get("level", 1)),
                    float(meta.get("alpha", n / max(len(projection), 1))),
                    int(meta.get("parent_nodes", len(projection))),
                    float(meta.get("delta_w", 0.0)))
