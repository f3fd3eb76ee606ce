"""Time-constrained two-phase tuning on a graph synopsis, then on the original graph."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any

import numpy as np

from ..coarsen import SynopsisChain, build_chain
from ..embed import Embedder, runtime_ratio
from ..evaluation import TaskData
from ..graph import split_edges
from ..space import Configuration, HyperparameterSpace, lhs_sample, trim_space
from .budget import TuningBudget, compute_rounds, exact
from .runner import RoundClock, TrialRunner, WallClock, best_of, mean_or
from .trials import TrialLog

logger = logging.getLogger(__name__)


@dataclass
class TuneResult:
    config: Configuration | None
    performance: float | None
    log: TrialLog
    budget: TuningBudget | None = None
    info: dict[str, Any] = field(default_factory=dict)

    def __iter__(self):
        # allows ``theta, log = tune_...(...)``
        return iter((self.config, self.log))


def synopsis_task(data: TaskData, synopsis_graph, seed: int) -> TaskData:
    """Task data for a synopsis: re-split its edges, or use its merged labels."""
    if data.task == "link_prediction":
        fraction = data.split.holdout_fraction if data.split is not None else 0.2
        split = split_edges(synopsis_graph, fraction, seed)
        return replace(data, graph=split.train_graph, split=split, seed=seed)
    labels = synopsis_graph.labels
    if labels is None or sum(1 for s in labels if s) < 2:
        raise ValueError("synopsis carries too few labeled nodes")
    return replace(data, graph=synopsis_graph, labels=labels, split=None)


def _derived_seed(seed: int, tag: str) -> int:
    return int(np.random.SeedSequence([seed, sum(tag.encode())]).generate_state(1)[0])


def _pick_synopsis(chain: SynopsisChain, data: TaskData, seed: int):
    """Selected level, or the nearest shallower one that supports the task."""
    for idx in range(chain.selected, -1, -1):
        syn = chain.levels[idx]
        try:
            return syn, synopsis_task(data, syn.graph, _derived_seed(seed, "synopsis-split"))
        except ValueError as exc:
            logger.info("synopsis level %d unusable for %s: %s", syn.level, data.task, exc)
    return None, None


def tune_jitune(data: TaskData, embedder: Embedder, budget_seconds: float | None = None,
                budget_rounds: int | None = None, tau: float = 0.5, seed: int = 0,
                workers: int = 1, attributed: bool | None = None,
                phase1_only: bool = False, timer=None,
                space: HyperparameterSpace | None = None) -> TuneResult:
    """Tune ``embedder`` for ``data.task`` within a wall-clock or round budget.

    Exactly one of ``budget_seconds`` and ``budget_rounds`` must be given.
    With ``budget_rounds`` every charge is in original-run units, which
    makes the whole run reproducible for a fixed seed. ``phase1_only``
    stops after the synopsis search and its validation on the original
    graph, skipping the refinement loop.
    """
    if (budget_seconds is None) == (budget_rounds is None):
        raise ValueError("give exactly one of budget_seconds and budget_rounds")
    space = space or embedder.descriptor.space
    clock = RoundClock() if budget_rounds is not None else WallClock(timer or time.monotonic)
    log = TrialLog()
    runner = TrialRunner(embedder, clock, log, seed, workers)
    info: dict[str, Any] = {"method": "jitune", "seed": seed, "tau": tau}

    # timing run on the original graph
    t_unit = Fraction(1) if clock.virtual else None
    runner.run_batch([space.center()], data, "0-timing", "original", cost=t_unit or 0)
    t_wall = runner.wall_seconds[-1]
    t_g = 1.0 if clock.virtual else max(t_wall, 1e-9)
    info["t_g_seconds"] = t_wall

    # synopsis chain
    t0 = time.perf_counter()
    attributed = data.graph.attributes is not None if attributed is None else attributed
    syn = syn_data = chain = None
    try:
        chain = build_chain(data.graph, tau, attributed=attributed,
                            seed=_derived_seed(seed, "chain"))
        syn, syn_data = _pick_synopsis(chain, data, seed)
    except ValueError as exc:
        logger.info("no synopsis: %s", exc)
    info["coarsen_seconds"] = time.perf_counter() - t0
    if chain is not None:
        info["chain"] = [{"level": s.level, "nodes": s.node_count, "edges": s.graph.edge_count,
                          "alpha": s.alpha, "delta_w": s.delta_w} for s in chain.levels]
    alpha = syn.alpha if syn is not None else tau
    if syn is not None:
        rho = runtime_ratio(embedder.descriptor, data.graph, syn.graph)
        info.update(synopsis_level=syn.level, alpha=alpha, rho=rho)
    else:
        rho = 1.0

    total = float(budget_rounds) if clock.virtual else float(budget_seconds)
    budget = compute_rounds(total, t_g, rho)
    if syn is None:
        budget = replace(budget, synopsis_rounds=0)
    info["budget"] = {"T": budget.total, "t_G": budget.t_g, "R": budget.rounds,
                      "r": budget.synopsis_rounds, "rho": budget.rho,
                      "accounted": float(budget.accounted())}
    T = Fraction(total) if clock.virtual else total
    half = budget.rounds // 2
    unit = Fraction(1) if clock.virtual else t_g

    # phase 1: sample the synopsis, keep the best
    rng = np.random.default_rng(_derived_seed(seed, "lhs"))
    theta_syn = None
    if budget.synopsis_rounds > 0 and syn is not None:
        configs = lhs_sample(space, budget.synopsis_rounds, rng)
        syn_cost = exact(rho) if clock.virtual else rho * t_g
        runner.run_batch(configs, syn_data, "1-synopsis", "synopsis", cost=syn_cost,
                         limit=T - half * unit)
        best = best_of(log.select("synopsis"))
        theta_syn = best.config if best is not None else None
    info["synopsis_best"] = theta_syn

    # phase 1: validate a trimmed neighbourhood on the original graph
    trim_alpha = alpha if 0 < alpha < 1 else 0.5
    current = trim_space(space, theta_syn, trim_alpha) if theta_syn is not None else space
    info["phase1_space"] = current.to_lines()
    if half > 0:
        runner.run_batch(lhs_sample(current, half, rng), data, "1-original",
                         "original", cost=unit, limit=T + unit)

    # phase 2: spend what is left around the incumbent
    while not phase1_only:
        originals = log.select("original")
        incumbent = best_of(originals)
        t_est = unit if clock.virtual else mean_or(
            [w for t, w in zip(log, runner.wall_seconds) if t.graph_tag == "original"], t_g)
        extra = T - clock.now()
        r_extra = math.floor(extra / t_est) if extra > 0 else 0
        if r_extra < 1 or incumbent is None:
            break
        center = current.clamp(incumbent.config)
        current = trim_space(current, center, trim_alpha)
        ran = runner.run_batch(lhs_sample(current, r_extra, rng), data, "2-refine",
                               "original", cost=unit, limit=T + unit)
        if not ran:
            break

    final = best_of(log.select("original"))
    info["original_runs"] = len(log.select("original"))
    info["wall_seconds"] = list(runner.wall_seconds)
    return TuneResult(final.config if final else None, final.performance if final else None,
                      log, budget, info)
