"""Downstream scoring of embeddings: link prediction AUC and node classification."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Any, Sequence

import numpy as np
from scipy.stats import rankdata

from .graph import EdgeSplit, Graph, split_edges

TASKS = ("link_prediction", "classification")


@dataclass
class EvalResult:
    metric: str
    value: float
    task: str
    seed: int | None = None
    details: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"{self.metric} value {self.value} outside [0, 1]")

    def to_json(self) -> str:
        d = asdict(self)
        return json.dumps({k: d[k] for k in ("task", "metric", "value", "seed", "details")},
                          sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "EvalResult":
        d = json.loads(text)
        return cls(d["metric"], d["value"], d["task"], d.get("seed"), d.get("details", {}))


def auc_from_scores(pos: Sequence[float], neg: Sequence[float]) -> float:
    """Mann-Whitney AUC: P(score_pos > score_neg) with ties counted half."""
    pos = np.asarray(pos, dtype=np.float64)
    neg = np.asarray(neg, dtype=np.float64)
    if pos.size == 0 or neg.size == 0:
        raise ValueError("need at least one positive and one negative score")
    ranks = rankdata(np.concatenate([pos, neg]))
    n_pos, n_neg = pos.size, neg.size
    u = ranks[:n_pos].sum() - n_pos * (n_pos + 1) / 2
    return float(u / (n_pos * n_neg))


def auc_brute_force(pos: Sequence[float], neg: Sequence[float]) -> float:
    wins = 0.0
    for p in pos:
        for q in neg:
            wins += 1.0 if p > q else 0.5 if p == q else 0.0
    return wins / (len(pos) * len(neg))


def edge_scores(embeddings: np.ndarray, pairs: np.ndarray, scorer: str = "inner") -> np.ndarray:
    x = embeddings
    if scorer == "cosine":
        norms = np.linalg.norm(x, axis=1, keepdims=True)
        x = x / np.where(norms == 0, 1.0, norms)
    elif scorer != "inner":
        raise ValueError(f"unknown scorer {scorer!r}")
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    return np.einsum("ij,ij->i", x[pairs[:, 0]], x[pairs[:, 1]])


def link_prediction_auc(embeddings: np.ndarray, split: EdgeSplit, scorer: str = "inner"
                        ) -> EvalResult:
    n = split.train_graph.node_count
    if embeddings.shape[0] != n:
        raise ValueError(f"embedding has {embeddings.shape[0]} rows, graph has {n} nodes")
    pos = edge_scores(embeddings, split.test_positive, scorer)
    neg = edge_scores(embeddings, split.test_negative, scorer)
    value = auc_from_scores(pos, neg)
    return EvalResult("AUC", value, "link_prediction", split.seed,
                      {"positives": int(pos.size), "negatives": int(neg.size), "scorer": scorer})


# -- node classification -----------------------------------------------------


def _standardize(train: np.ndarray, test: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    mu = train.mean(axis=0)
    sd = train.std(axis=0)
    sd[sd == 0] = 1.0
    return (train - mu) / sd, (test - mu) / sd


def _loss(w, x, y, l2):
    z = x @ w
    n = x.shape[0]
    # log(1 + e^z) - y z, stable; per-label columns
    ll = np.logaddexp(0.0, z) - y * z
    reg = 0.5 * l2 * (w[:-1] ** 2).sum(axis=0)
    return (ll.sum(axis=0) + reg) / n


def fit_logistic_ovr(x: np.ndarray, y: np.ndarray, l2: float = 1.0, max_iter: int = 500,
                     tol: float = 1e-6) -> tuple[np.ndarray, list[np.ndarray]]:
    """One-vs-rest L2 logistic regression by full-batch gradient descent.

    ``y`` is an ``(n, C)`` 0/1 matrix. The step size is the inverse
    Lipschitz constant of the gradient, so each label's objective decreases
    monotonically. Returns weights ``(d + 1, C)`` (last row is the bias)
    and the per-iteration loss vectors.
    """
    n = x.shape[0]
    xb = np.hstack([x, np.ones((n, 1))])
    sigma_max = np.linalg.norm(xb, 2)
    lipschitz = (sigma_max ** 2 / 4 + l2) / n
    step = 1.0 / lipschitz
    w = np.zeros((xb.shape[1], y.shape[1]))
    mask = np.ones_like(w)
    mask[-1] = 0.0
    losses = [_loss(w, xb, y, l2)]
    for _ in range(max_iter):
        p = 1.0 / (1.0 + np.exp(-(xb @ w)))
        grad = (xb.T @ (p - y) + l2 * w * mask) / n
        if np.linalg.norm(grad, axis=0).max() < tol:
            break
        w = w - step * grad
        losses.append(_loss(w, xb, y, l2))
    return w, losses


def predict_scores(w: np.ndarray, x: np.ndarray) -> np.ndarray:
    return np.hstack([x, np.ones((x.shape[0], 1))]) @ w


def _micro_f1(pred: list[set], true: list[set]) -> tuple[float, int, int, int]:
    tp = sum(len(p & t) for p, t in zip(pred, true))
    n_pred = sum(len(p) for p in pred)
    n_true = sum(len(t) for t in true)
    if tp == 0:
        return 0.0, tp, n_pred, n_true
    precision = tp / n_pred
    recall = tp / n_true
    return 2 * precision * recall / (precision + recall), tp, n_pred, n_true


def classify_with_split(embeddings: np.ndarray, labels: Sequence[frozenset],
                        train_idx: np.ndarray, test_idx: np.ndarray, metric: str = "MicroF1",
                        l2: float = 1.0, max_iter: int = 500) -> EvalResult:
    classes = sorted(set().union(*(labels[i] for i in list(train_idx) + list(test_idx))))
    train_classes = set().union(*(labels[i] for i in train_idx)) if len(train_idx) else set()
    skipped = [c for c in classes if c not in train_classes]
    usable = [c for c in classes if c in train_classes]
    details: dict[str, Any] = {"skipped_labels": skipped, "train": int(len(train_idx)),
                               "test": int(len(test_idx))}
    if not usable:
        raise ValueError("no label has training examples")
    col = {c: j for j, c in enumerate(usable)}
    y = np.zeros((len(train_idx), len(usable)))
    for r, i in enumerate(train_idx):
        for c in labels[i]:
            if c in col:
                y[r, col[c]] = 1.0
    xtr, xte = _standardize(embeddings[train_idx], embeddings[test_idx])
    w, losses = fit_logistic_ovr(xtr, y, l2=l2, max_iter=max_iter)
    details["iterations"] = len(losses) - 1
    scores = predict_scores(w, xte)
    true = [set(labels[i]) for i in test_idx]
    if metric == "Accuracy":
        pred = [usable[int(j)] for j in scores.argmax(axis=1)]
        hits = sum(1 for p, t in zip(pred, true) if p in t)
        return EvalResult("Accuracy", hits / len(true), "classification", None, details)
    pred = []
    for r, t in enumerate(true):
        k = len(t)
        top = np.argsort(-scores[r], kind="stable")[:k]
        pred.append({usable[int(j)] for j in top})
    f1, tp, n_pred, n_true = _micro_f1(pred, true)
    details.update(tp=tp, predicted=n_pred, actual=n_true)
    return EvalResult("MicroF1", f1, "classification", None, details)


def node_classification_micro_f1(embeddings: np.ndarray, labels: Sequence[frozenset],
                                 train_fraction: float = 0.2, seed: int = 0,
                                 metric: str = "MicroF1") -> EvalResult:
    """Train one-vs-rest logistic regression on a random ``train_fraction`` of labeled nodes."""
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must lie in (0, 1)")
    labeled = np.array([i for i, s in enumerate(labels) if s], dtype=np.int64)
    if labeled.size < 2:
        raise ValueError("need at least two labeled nodes")
    if embeddings.shape[0] != len(labels):
        raise ValueError("embedding rows and label sets differ in count")
    rng = np.random.default_rng(seed)
    order = labeled[rng.permutation(labeled.size)]
    n_train = min(max(int(round(train_fraction * labeled.size)), 1), labeled.size - 1)
    result = classify_with_split(embeddings, labels, np.sort(order[:n_train]),
                                 np.sort(order[n_train:]), metric=metric)
    result.seed = seed
    result.details["train_fraction"] = train_fraction
    return result


@dataclass(frozen=True, eq=False)
class TaskData:
    """Everything a task needs besides the embedding.

    ``graph`` is what gets embedded: for link prediction it is the split's
    training graph.
    """

    task: str
    graph: Graph
    split: EdgeSplit | None = None
    labels: tuple[frozenset, ...] | None = None
    train_fraction: float = 0.2
    seed: int = 0
    metric: str | None = None
    scorer: str = "inner"


def prepare_task(task: str, graph: Graph, seed: int = 0, holdout_fraction: float = 0.2,
                 train_fraction: float = 0.2, metric: str | None = None,
                 scorer: str = "inner") -> TaskData:
    if task == "link_prediction":
        split = split_edges(graph, holdout_fraction, seed)
        return TaskData(task, split.train_graph, split=split, seed=seed, metric=metric,
                        scorer=scorer)
    if task == "classification":
        if graph.labels is None or not any(graph.labels):
            raise ValueError("classification needs node labels")
        return TaskData(task, graph, labels=graph.labels, train_fraction=train_fraction,
                        seed=seed, metric=metric)
    raise ValueError(f"unknown task {task!r}; expected one of {TASKS}")


def evaluate(task: str, data: TaskData, embeddings: np.ndarray, seed: int | None = None
             ) -> EvalResult:
    """Score ``embeddings`` on ``task`` using the split/labels carried by ``data``."""
    if task not in TASKS:
        raise ValueError(f"unknown task {task!r}; expected one of {TASKS}")
    if task == "link_prediction":
        if data.split is None:
            raise ValueError("link prediction needs an edge split")
        return link_prediction_auc(embeddings, data.split, data.scorer)
    if data.labels is None:
        raise ValueError("classification needs node labels")
    return node_classification_micro_f1(
        embeddings, data.labels, data.train_fraction,
        data.seed if seed is None else seed, metric=data.metric or "MicroF1")
