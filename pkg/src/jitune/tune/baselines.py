"""Baseline tuners: uniform random search and GP-based Bayesian optimization."""

from __future__ import annotations

from fractions import Fraction

import numpy as np
import scipy.linalg
from scipy.stats import norm

from ..embed import Embedder
from ..evaluation import TaskData
from ..space import HyperparameterSpace, uniform_sample
from .jitune import TuneResult
from .runner import RoundClock, TrialRunner, best_of
from .trials import TrialLog


def tune_random(data: TaskData, embedder: Embedder, rounds: int, seed: int = 0,
                workers: int = 1, space: HyperparameterSpace | None = None) -> TuneResult:
    if rounds < 1:
        raise ValueError("rounds must be at least 1")
    space = space or embedder.descriptor.space
    log = TrialLog()
    runner = TrialRunner(embedder, RoundClock(), log, seed, workers)
    configs = uniform_sample(space, rounds, np.random.default_rng([seed, 1]))
    runner.run_batch(configs, data, "random", "original", cost=Fraction(1))
    best = best_of(log.trials)
    return TuneResult(best.config if best else None, best.performance if best else None, log,
                      info={"method": "random", "seed": seed, "rounds": rounds,
                            "wall_seconds": list(runner.wall_seconds)})


class GaussianProcess:
    """Zero-mean GP regression with an isotropic-per-dim RBF kernel on standardized targets."""

    def __init__(self, length_scale: float = 0.2, noise: float = 1e-6):
        self.length_scale = length_scale
        self.noise = noise

    def kernel(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        d2 = ((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=-1)
        return np.exp(-0.5 * d2 / self.length_scale ** 2)

    def fit(self, x: np.ndarray, y: np.ndarray) -> "GaussianProcess":
        self.x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        self.y_mean = y.mean()
        self.y_std = y.std() if y.std() > 0 else 1.0
        z = (y - self.y_mean) / self.y_std
        k = self.kernel(self.x, self.x)
        jitter = self.noise
        while True:
            try:
                self.chol = scipy.linalg.cho_factor(k + jitter * np.eye(len(k)), lower=True)
                break
            except np.linalg.LinAlgError:
                jitter *= 10
        self.alpha = scipy.linalg.cho_solve(self.chol, z)
        return self

    def predict(self, xs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        ks = self.kernel(np.asarray(xs, dtype=np.float64), self.x)
        mean = ks @ self.alpha
        v = scipy.linalg.cho_solve(self.chol, ks.T)
        var = np.clip(1.0 - np.einsum("ij,ji->i", ks, v), 0.0, None)
        return mean * self.y_std + self.y_mean, np.sqrt(var) * self.y_std


def expected_improvement(mean: np.ndarray, std: np.ndarray, best: float) -> np.ndarray:
    """EI for maximization; zero where the predictive std vanishes."""
    ei = np.zeros_like(mean)
    pos = std > 0
    z = (mean[pos] - best) / std[pos]
    ei[pos] = (mean[pos] - best) * norm.cdf(z) + std[pos] * norm.pdf(z)
    return np.maximum(ei, 0.0)


def tune_gp(data: TaskData, embedder: Embedder, rounds: int, init: int = 5, seed: int = 0,
            candidates: int = 1024, space: HyperparameterSpace | None = None) -> TuneResult:
    if rounds <= init:
        raise ValueError("rounds must exceed the number of initial random runs")
    space = space or embedder.descriptor.space
    log = TrialLog()
    runner = TrialRunner(embedder, RoundClock(), log, seed, 1)
    rng = np.random.default_rng([seed, 2])
    runner.run_batch(uniform_sample(space, init, rng), data, "gp-init", "original",
                     cost=Fraction(1))
    gp = GaussianProcess()
    ei_min = np.inf
    while len(log) < rounds:
        ok = [t for t in log if t.ok]
        pool = uniform_sample(space, candidates, rng)
        if ok:
            gp.fit(np.array([space.encode(t.config) for t in ok]),
                   np.array([t.performance for t in ok]))
            mean, std = gp.predict(np.array([space.encode(c) for c in pool]))
            ei = expected_improvement(mean, std, max(t.performance for t in ok))
            ei_min = min(ei_min, float(ei.min()))
            choice = pool[int(np.argmax(ei))]
        else:
            choice = pool[0]
        runner.run_batch([choice], data, "gp", "original", cost=Fraction(1))
    best = best_of(log.trials)
    return TuneResult(best.config if best else None, best.performance if best else None, log,
                      info={"method": "gp", "seed": seed, "rounds": rounds, "init": init,
                            "min_ei": ei_min, "wall_seconds": list(runner.wall_seconds)})
