import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from jitune.space import (
    Categorical,
    HyperparameterSpace,
    Numeric,
    lhs_sample,
    parse_space,
    trim_space,
    uniform_sample,
)


def strata_hit(dim, values, r):
    a, b = dim.bounds
    coords = [(math.log(v) if dim.log_scale else v) for v in values]
    idx = [min(int((c - a) / (b - a) * r), r - 1) for c in coords]
    return sorted(idx)


def test_lhs_one_per_quarter():
    d = Numeric("x", 0.0, 1.0)
    out = lhs_sample(HyperparameterSpace((d,)), 4, seed=3)
    assert strata_hit(d, [c["x"] for c in out], 4) == [0, 1, 2, 3]


def test_lhs_categorical_balance():
    space = HyperparameterSpace((Categorical("m", ("a", "b", "c")),))
    counts = Counter(c["m"] for c in lhs_sample(space, 5, seed=0))
    assert sorted(counts.values()) == [1, 2, 2]


def test_lhs_single_integer_sample():
    space = HyperparameterSpace((Numeric("k", 2, 10, integer=True),))
    (cfg,) = lhs_sample(space, 1, seed=9)
    assert isinstance(cfg["k"], int) and 2 <= cfg["k"] <= 10


@settings(max_examples=50, deadline=None)
@given(st.sampled_from([2, 5, 17, 64]), st.integers(0, 10**6), st.booleans())
def test_lhs_stratification_property(r, seed, log):
    d = Numeric("x", 1e-3, 7.0, log_scale=log)
    cat = Categorical("c", ("p", "q", "r", "s"))
    out = lhs_sample(HyperparameterSpace((d, cat)), r, seed)
    assert strata_hit(d, [c["x"] for c in out], r) == list(range(r))
    counts = Counter(c["c"] for c in out)
    full = [counts.get(ch, 0) for ch in cat.choices]
    assert max(full) - min(full) <= 1


def test_uniform_sample_stays_in_space():
    space = parse_space(["lr float 1e-4 0.1 log", "n int 1 5", "m cat x,y"])
    for cfg in uniform_sample(space, 50, seed=1):
        assert space.contains(cfg)


def test_parse_and_print_round_trip():
    space = parse_space(["# comment", "lr float 1e-4 0.1 log", "n int 1 5", "m cat x,y"])
    assert parse_space(space.to_lines()) == space
    with pytest.raises(ValueError):
        parse_space(["x float 1"])
    with pytest.raises(ValueError):
        parse_space(["x blob 1 2"])


def test_trim_centred():
    space = HyperparameterSpace((Numeric("x", 0.0, 10.0),))
    out = trim_space(space, {"x": 7.0}, 0.5)
    assert (out["x"].lo, out["x"].hi) == (4.5, 9.5)


def test_trim_shifted_at_edge():
    space = HyperparameterSpace((Numeric("x", 0.0, 10.0),))
    out = trim_space(space, {"x": 9.8}, 0.5)
    assert (out["x"].lo, out["x"].hi) == (5.0, 10.0)


def test_trim_small_alpha_keeps_nearly_everything():
    space = HyperparameterSpace((Numeric("x", 0.0, 10.0),))
    out = trim_space(space, {"x": 5.0}, 1e-9)
    assert out["x"].hi - out["x"].lo == pytest.approx(10.0, abs=1e-7)


def test_trim_categoricals():
    space = HyperparameterSpace((Categorical("m", ("a", "b")),))
    assert trim_space(space, {"m": "b"}, 0.5)["m"].choices == ("b",)
    assert trim_space(space, {"m": "b"}, 0.4)["m"].choices == ("a", "b")


def test_trim_rejects_outside_best():
    space = HyperparameterSpace((Numeric("x", 0.0, 1.0),))
    with pytest.raises(ValueError):
        trim_space(space, {"x": 2.0}, 0.5)


@st.composite
def trim_cases(draw):
    dims = []
    best = {}
    for i in range(draw(st.integers(1, 4))):
        log = draw(st.booleans())
        lo = draw(st.floats(1e-3, 10.0))
        hi = lo + draw(st.floats(1e-2, 100.0))
        d = Numeric(f"x{i}", lo, hi, log_scale=log)
        a, b = d.bounds
        best[d.name] = d.from_coord(a + draw(st.floats(0, 1)) * (b - a))
        dims.append(d)
    if draw(st.booleans()):
        dims.append(Categorical("c", ("u", "v", "w")))
        best["c"] = draw(st.sampled_from(["u", "v", "w"]))
    return HyperparameterSpace(tuple(dims)), best, draw(st.floats(0.01, 0.99))


@settings(max_examples=200, deadline=None)
@given(trim_cases())
def test_trim_properties(case):
    space, best, alpha = case
    out = trim_space(space, best, alpha)
    assert out.is_subspace_of(space)
    assert out.contains(best)
    for d in space:
        if isinstance(d, Numeric):
            a, b = d.bounds
            a2, b2 = out[d.name].bounds
            assert abs((b2 - a2) - (1 - alpha) * (b - a)) <= 1e-12 * max(1.0, b - a)


def test_center_and_clamp():
    space = parse_space(["lr float 1e-4 1e-2 log", "n int 1 4", "m cat x,y"])
    c = space.center()
    assert c["lr"] == pytest.approx(1e-3)
    assert c["n"] in (2, 3) and c["m"] == "x"
    clamped = space.clamp({"lr": 5.0, "n": -3, "m": "z"})
    assert clamped == {"lr": 1e-2, "n": 1, "m": "x"}
    assert np.all((space.encode(c)[:2] >= 0) & (space.encode(c)[:2] <= 1))
