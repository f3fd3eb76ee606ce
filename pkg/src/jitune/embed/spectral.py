"""AROPE-style embedding: polynomial-weighted top eigenpairs of the adjacency matrix.

Each node's row is ``[f(lambda_k) * x_k[v]]_k`` with
``f(lambda) = w1*lambda + w2*lambda**2 + w3*lambda**3`` over the ``dim``
eigenpairs of largest magnitude.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from ..graph import Graph
from ..space import HyperparameterSpace, Numeric
from .base import Embedder, EmbedderDescriptor, EmbeddingError

SPECTRAL_SPACE = HyperparameterSpace((
    Numeric("w1", 1e-4, 3.0),
    Numeric("w2", 1e-4, 3.0),
    Numeric("w3", 1e-4, 3.0),
))


class ConvergenceError(EmbeddingError):
    pass


def _rayleigh_ritz(a, q):
    h = q.T @ (a @ q)
    h = (h + h.T) / 2
    vals, vecs = scipy.linalg.eigh(h)
    # largest magnitude first; positive wins a magnitude tie, judged after
    # rounding away the last few bits so +1/-1 pairs really do tie
    scale = max(float(np.abs(vals).max(initial=0.0)), 1.0)
    mag = np.round(np.abs(vals) / scale, 10)
    order = np.lexsort((-vals, -mag))
    return vals[order], q @ vecs[:, order]


def top_eigenpairs(matrix, k: int, tol: float = 1e-6, max_iter: int = 5000, seed: int = 0,
                   oversample: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Top-``k`` (by magnitude) eigenpairs of a symmetric matrix.

    Block power iteration with a Rayleigh-Ritz restart every step; the
    block carries ``oversample`` extra vectors to speed up convergence.
    Stops once every returned pair has ``||A x - lambda x||_inf <= tol``.
    """
    n = matrix.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n, got k={k}, n={n}")
    extra = max(k, 8) if oversample is None else oversample
    p = min(n, k + extra)
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(rng.standard_normal((n, p)))
    for _ in range(max_iter):
        vals, ritz = _rayleigh_ritz(matrix, q)
        resid = matrix @ ritz[:, :k] - ritz[:, :k] * vals[:k]
        if np.abs(resid).max(initial=0.0) <= tol:
            return vals[:k], _fix_signs(ritz[:, :k])
        q, _ = np.linalg.qr(matrix @ ritz)
    raise ConvergenceError(f"eigenpairs not converged to {tol} after {max_iter} iterations")


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    idx = np.abs(vecs).argmax(axis=0)
    signs = np.sign(vecs[idx, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs


def spectral_embed(graph: Graph, w1: float, w2: float, w3: float, dim: int,
                   seed: int = 0, tol: float = 1e-6, max_iter: int = 5000) -> np.ndarray:
    if dim > graph.node_count:
        raise ValueError(f"dim={dim} exceeds node count {graph.node_count}")
    vals, vecs = top_eigenpairs(graph.adjacency_matrix, int(dim), tol=tol, max_iter=max_iter,
                                seed=seed)
    scale = w1 * vals + w2 * vals ** 2 + w3 * vals ** 3
    return vecs * scale


class Spectral(Embedder):
    descriptor = EmbedderDescriptor("arope", SPECTRAL_SPACE, "E_plus_V")
    defaults = {"dim": 32}

    def embed(self, graph, config, seed=0):
        dim = min(int(config["dim"]), graph.node_count)
        return spectral_embed(graph, float(config["w1"]), float(config["w2"]),
                              float(config["w3"]), dim, seed)
