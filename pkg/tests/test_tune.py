import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jitune.embed import EmbedderDescriptor, FunctionEmbedder
from jitune.evaluation import prepare_task
from jitune.space import HyperparameterSpace, Numeric, parse_space
from jitune.tune import (
    BudgetError,
    GaussianProcess,
    TrialLog,
    compute_rounds,
    expected_improvement,
    tune_gp,
    tune_jitune,
    tune_random,
)

from conftest import sbm

SPACE = HyperparameterSpace((Numeric("x", 0.0, 1.0), Numeric("y", 1.0, 100.0, log_scale=True)))


def toy_embed(graph, config, seed):
    """Adjacency rows plus noise that grows with distance of x from 0.3."""
    rng = np.random.default_rng(seed)
    a = graph.adjacency_matrix.toarray()
    return a + abs(config["x"] - 0.3) * 3 * rng.standard_normal(a.shape)


def toy_embedder(cls="E_plus_V"):
    return FunctionEmbedder(EmbedderDescriptor("toy", SPACE, cls), toy_embed)


class FakeTime:
    """Embedder plus timer: a run costs 1s on the full graph and 0.05s on anything smaller."""

    def __init__(self, full_nodes):
        self.now = 0.0
        self.full = full_nodes
        self.embedder = FunctionEmbedder(EmbedderDescriptor("toy", SPACE, "E_plus_V"), self.run)

    def run(self, graph, config, seed):
        self.now += 1.0 if graph.node_count == self.full else 0.05
        return toy_embed(graph, config, seed)

    def __call__(self):
        return self.now


@pytest.fixture(scope="module")
def lp_data():
    return prepare_task("link_prediction", sbm([40, 40], 0.25, 0.02, seed=5), seed=1)


@pytest.mark.parametrize("total,rho,R,r", [(50, 0.1, 50, 240), (10, 0.5, 10, 8), (2, 1.0, 2, 0)])
def test_compute_rounds_examples(total, rho, R, r):
    b = compute_rounds(total, 1.0, rho)
    assert (b.rounds, b.synopsis_rounds) == (R, r)
    assert b.holds()


def test_compute_rounds_in_seconds():
    b = compute_rounds(100.0, 2.0, 0.1)
    assert (b.rounds, b.synopsis_rounds) == (50, 240)


def test_compute_rounds_rejects_tiny_budget():
    with pytest.raises(BudgetError):
        compute_rounds(1.5, 1.0, 0.5)
    with pytest.raises(ValueError):
        compute_rounds(10, 1.0, 0.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(2.0, 1e4), st.floats(1e-3, 10.0), st.floats(1e-4, 1.0))
def test_compute_rounds_conserves_budget(ratio, t_g, rho):
    total = ratio * t_g
    if Fraction(repr(total)) < 2 * Fraction(repr(t_g)):
        return
    b = compute_rounds(total, t_g, rho)
    assert b.holds()
    assert b.synopsis_rounds >= 0


def test_round_budget_accounting(lp_data):
    res = tune_jitune(lp_data, toy_embedder(), budget_rounds=12, seed=3)
    b = res.budget
    originals = res.log.select("original")
    assert len(originals) <= b.original_rounds
    assert len(res.log.select("synopsis")) == b.synopsis_rounds
    assert res.log[0].phase == "0-timing"
    assert res.log[-1].clock <= 12
    assert res.config == max((t for t in originals if t.ok), key=lambda t: t.performance).config


def test_round_mode_is_reproducible_across_workers(lp_data):
    a = tune_jitune(lp_data, toy_embedder(), budget_rounds=10, seed=4)
    b = tune_jitune(lp_data, toy_embedder(), budget_rounds=10, seed=4, workers=3)
    assert a.log.to_jsonl() == b.log.to_jsonl()
    assert a.config == b.config


def test_phase1_configs_lie_in_trimmed_space(lp_data):
    res = tune_jitune(lp_data, toy_embedder(), budget_rounds=16, seed=2)
    trimmed = parse_space(res.info["phase1_space"])
    assert trimmed.is_subspace_of(SPACE)
    for t in res.log.select(phases=["1-original"]):
        assert trimmed.contains(t.config)


def test_tiny_budget_skips_synopsis_phase(lp_data):
    res = tune_jitune(lp_data, toy_embedder(), budget_rounds=2, seed=0)
    assert res.budget.synopsis_rounds == 0
    assert res.log.select("synopsis") == []
    assert [t.phase for t in res.log] == ["0-timing", "1-original"]


def test_wall_budget_runs_refinement_within_bounds(lp_data):
    fake = FakeTime(lp_data.graph.node_count)
    res = tune_jitune(lp_data, fake.embedder, budget_seconds=20.0, seed=1, timer=fake)
    b = res.budget
    refine = res.log.select(phases=["2-refine"])
    assert refine, "cheap synopsis runs should leave time for refinement"
    originals = res.log.select("original")
    assert len(originals) <= b.original_rounds + len(refine)
    trimmed = parse_space(res.info["phase1_space"])
    assert all(trimmed.contains(t.config) for t in refine)
    assert fake.now <= 1.3 * 20.0
    inc = [row["incumbent"] for row in res.log.curve() if row["incumbent"] is not None]
    assert inc == sorted(inc)


def test_failed_trials_do_not_abort(lp_data):
    def flaky(graph, config, seed):
        if config["x"] > 0.5:
            raise RuntimeError("boom")
        return toy_embed(graph, config, seed)

    emb = FunctionEmbedder(EmbedderDescriptor("toy", SPACE, "E_plus_V"), flaky)
    res = tune_jitune(lp_data, emb, budget_rounds=10, seed=0)
    statuses = {t.status for t in res.log}
    assert "failed" in statuses and "ok" in statuses
    assert res.config["x"] <= 0.5


def test_phase1_only_skips_refinement(lp_data):
    fake = FakeTime(lp_data.graph.node_count)
    res = tune_jitune(lp_data, fake.embedder, budget_seconds=20.0, seed=1, timer=fake,
                      phase1_only=True)
    assert res.config is not None
    assert {t.phase for t in res.log} == {"0-timing", "1-synopsis", "1-original"}


def test_classification_tuning_uses_synopsis_labels():
    g = sbm([40, 40], 0.25, 0.02, seed=2)
    data = prepare_task("classification", g, seed=0)
    res = tune_jitune(data, toy_embedder(), budget_rounds=8, seed=0)
    assert res.log.select("synopsis")
    assert res.performance is not None


def test_random_search(lp_data):
    res = tune_random(lp_data, toy_embedder(), 6, seed=1)
    assert len(res.log) == 6
    best = max(res.log, key=lambda t: t.performance)
    assert res.config == best.config
    again = tune_random(lp_data, toy_embedder(), 6, seed=1)
    assert again.log.to_jsonl() == res.log.to_jsonl()
    one = tune_random(lp_data, toy_embedder(), 1, seed=1)
    assert one.config == one.log[0].config


def test_gp_search(lp_data):
    res = tune_gp(lp_data, toy_embedder(), 8, seed=0)
    assert len(res.log) == 8
    assert [t.phase for t in res.log][:5] == ["gp-init"] * 5
    assert res.info["min_ei"] >= 0


def test_gp_interpolates_observations():
    rng = np.random.default_rng(0)
    x = rng.random((6, 2))
    y = np.sin(3 * x[:, 0]) + x[:, 1]
    mean, std = GaussianProcess().fit(x, y).predict(x)
    assert np.max(np.abs(mean - y)) <= 1e-3
    assert np.all(std >= 0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=1, max_size=20), st.floats(-5, 5), st.integers(0, 99))
def test_expected_improvement_non_negative(means, best, seed):
    mean = np.array(means)
    std = np.abs(np.random.default_rng(seed).standard_normal(len(means)))
    std[::3] = 0.0
    assert np.all(expected_improvement(mean, std, best) >= 0)


def test_trial_log_round_trips(lp_data, tmp_path):
    res = tune_jitune(lp_data, toy_embedder(), budget_rounds=6, seed=0)
    back = TrialLog.from_jsonl(res.log.to_jsonl())
    assert back.to_jsonl() == res.log.to_jsonl()
    with open(tmp_path / "t.csv", "w", newline="") as fh:
        res.log.write_csv(fh)
    with open(tmp_path / "t.csv", newline="") as fh:
        again = TrialLog.read_csv(fh)
    assert again.to_jsonl() == res.log.to_jsonl()


def test_trial_log_rejects_clock_going_backwards(lp_data):
    res = tune_random(lp_data, toy_embedder(), 2, seed=0)
    log = TrialLog()
    log.append(res.log[1])
    with pytest.raises(ValueError):
        log.append(res.log[0])
    assert math.isfinite(res.log.best().performance)
