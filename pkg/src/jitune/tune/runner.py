"""Timed, failure-isolated execution of embedder trials."""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from ..embed import Embedder
from ..evaluation import TaskData, evaluate
from ..space import Configuration
from .trials import Trial, TrialLog

logger = logging.getLogger(__name__)


def trial_seed(master: int, index: int) -> int:
    return int(np.random.SeedSequence([master, index]).generate_state(1)[0])


class WallClock:
    """Seconds since construction on the monotonic clock."""

    virtual = False

    def __init__(self, timer: Callable[[], float] = time.monotonic):
        self.timer = timer
        self.start = timer()

    def now(self) -> float:
        return self.timer() - self.start

    def charge(self, cost) -> None:
        pass


class RoundClock:
    """Accounting clock in original-run units: a trial costs its predicted share.

    Makes round-count budgets independent of machine speed and scheduling.
    """

    virtual = True

    def __init__(self):
        self._t = Fraction(0)

    def now(self) -> Fraction:
        return self._t

    def charge(self, cost) -> None:
        self._t += Fraction(cost)


@dataclass
class TrialResult:
    config: Configuration
    performance: float | None
    metric: str | None
    wall: float
    seed: int
    error: str | None = None


def run_one(embedder: Embedder, data: TaskData, config: Configuration, seed: int,
            timer: Callable[[], float] = time.perf_counter) -> TrialResult:
    t0 = timer()
    try:
        emb = embedder(data.graph, config, seed)
        result = evaluate(data.task, data, emb)
        return TrialResult(config, result.value, result.metric, timer() - t0, seed)
    except Exception as exc:  # a failed trial must never abort tuning
        logger.warning("trial failed: %s: %s", type(exc).__name__, exc)
        return TrialResult(config, None, None, timer() - t0, seed,
                           f"{type(exc).__name__}: {exc}")


class TrialRunner:
    """Runs batches of configurations and appends them to a shared log.

    ``limit`` is the latest clock reading at which a trial may still be
    launched given its expected cost; trials past it are not started.
    """

    def __init__(self, embedder: Embedder, clock, log: TrialLog, master_seed: int,
                 workers: int = 1):
        self.embedder = embedder
        self.clock = clock
        self.log = log
        self.master_seed = master_seed
        self.workers = max(1, int(workers))
        self.wall_seconds: list[float] = []
        # trial durations come from the budget clock's own timer in wall mode
        self.timer = time.perf_counter if clock.virtual else clock.timer

    def _allowed(self, n: int, cost, limit) -> int:
        if limit is None:
            return n
        now = self.clock.now()
        if self.clock.virtual:
            # exact per-trial accounting, independent of worker count
            k = 0
            while k < n and now + (k + 1) * Fraction(cost) <= limit:
                k += 1
            return k
        return n if now + float(cost) <= float(limit) else 0

    def run_batch(self, configs: Sequence[Configuration], data: TaskData, phase: str,
                  graph_tag: str, cost, limit=None) -> list[Trial]:
        """Evaluate ``configs`` in order; ``cost`` is the per-trial charge on a virtual clock."""
        done: list[Trial] = []
        pending = list(configs)
        while pending:
            chunk_size = len(pending) if self.clock.virtual else self.workers
            k = self._allowed(min(chunk_size, len(pending)), cost, limit)
            if k == 0:
                break
            chunk, pending = pending[:k], pending[k:]
            base = len(self.log)
            seeds = [trial_seed(self.master_seed, base + i) for i in range(k)]
            if self.workers > 1 and k > 1:
                with ThreadPoolExecutor(self.workers) as pool:
                    results = list(pool.map(
                        lambda a: run_one(self.embedder, data, *a, self.timer),
                        zip(chunk, seeds)))
            else:
                results = [run_one(self.embedder, data, c, s, self.timer)
                           for c, s in zip(chunk, seeds)]
            for i, res in enumerate(results):
                self.clock.charge(cost)
                self.wall_seconds.append(res.wall)
                elapsed = float(cost) if self.clock.virtual else res.wall
                trial = Trial(
                    index=base + i, phase=phase, graph_tag=graph_tag, config=dict(res.config),
                    performance=res.performance, metric=res.metric, elapsed=elapsed,
                    clock=float(self.clock.now()), seed=res.seed,
                    status="ok" if res.error is None else "failed", error=res.error)
                self.log.append(trial)
                done.append(trial)
        return done


def best_of(trials: Sequence[Trial]) -> Trial | None:
    best = None
    for t in trials:
        if t.ok and (best is None or t.performance > best.performance):
            best = t
    return best


def mean_or(values: Sequence[float], default: float) -> float:
    values = [v for v in values if math.isfinite(v)]
    return sum(values) / len(values) if values else default
