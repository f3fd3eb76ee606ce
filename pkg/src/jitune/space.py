"""Mixed numeric/categorical search spaces, Latin hypercube sampling and trimming."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Iterable, Union

import numpy as np

Configuration = dict[str, Any]


@dataclass(frozen=True)
class Numeric:
    name: str
    lo: float
    hi: float
    integer: bool = False
    log_scale: bool = False

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"{self.name}: need lo < hi, got [{self.lo}, {self.hi}]")
        if self.log_scale and self.lo <= 0:
            raise ValueError(f"{self.name}: log scale requires lo > 0")
        if self.integer and math.ceil(self.lo) > math.floor(self.hi):
            raise ValueError(f"{self.name}: integer range [{self.lo}, {self.hi}] holds no integer")

    @property
    def bounds(self) -> tuple[float, float]:
        """Range in sampling coordinates (log-transformed when ``log_scale``)."""
        if self.log_scale:
            return math.log(self.lo), math.log(self.hi)
        return float(self.lo), float(self.hi)

    def to_unit(self, value: float) -> float:
        a, b = self.bounds
        t = math.log(value) if self.log_scale else float(value)
        return (t - a) / (b - a)

    def from_coord(self, t: float):
        """Map a sampling coordinate back to a legal value."""
        value = math.exp(t) if self.log_scale else t
        value = min(max(value, self.lo), self.hi)
        if self.integer:
            value = int(round(value))
            value = min(max(value, math.ceil(self.lo)), math.floor(self.hi))
        return value

    def contains(self, value) -> bool:
        if isinstance(value, bool) or not isinstance(value, (int, float, np.integer, np.floating)):
            return False
        if self.integer and float(value) != int(value):
            return False
        return self.lo <= value <= self.hi


@dataclass(frozen=True)
class Categorical:
    name: str
    choices: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "choices", tuple(self.choices))
        if not self.choices:
            raise ValueError(f"{self.name}: no choices")
        if len(set(self.choices)) != len(self.choices):
            raise ValueError(f"{self.name}: duplicate choices")

    def contains(self, value) -> bool:
        return value in self.choices


Dim = Union[Numeric, Categorical]


@dataclass(frozen=True)
class HyperparameterSpace:
    dims: tuple[Dim, ...]

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(self.dims))
        names = [d.name for d in self.dims]
        if len(set(names)) != len(names):
            raise ValueError("duplicate dimension names")

    def __iter__(self):
        return iter(self.dims)

    def __getitem__(self, name: str) -> Dim:
        for d in self.dims:
            if d.name == name:
                return d
        raise KeyError(name)

    @property
    def names(self) -> list[str]:
        return [d.name for d in self.dims]

    def contains(self, config: Configuration) -> bool:
        return all(d.name in config and d.contains(config[d.name]) for d in self.dims)

    def is_subspace_of(self, other: "HyperparameterSpace") -> bool:
        for d in self.dims:
            o = other[d.name]
            if isinstance(d, Numeric):
                if not (isinstance(o, Numeric) and o.lo <= d.lo and d.hi <= o.hi):
                    return False
            elif not set(d.choices) <= set(o.choices):
                return False
        return True

    def center(self) -> Configuration:
        """Midpoint of every numeric range, first choice of every categorical."""
        out: Configuration = {}
        for d in self.dims:
            if isinstance(d, Numeric):
                a, b = d.bounds
                out[d.name] = d.from_coord((a + b) / 2)
            else:
                out[d.name] = d.choices[0]
        return out

    def clamp(self, config: Configuration) -> Configuration:
        """Nearest configuration inside the space (categoricals outside snap to the first choice)."""
        out = dict(config)
        for d in self.dims:
            v = config[d.name]
            if isinstance(d, Numeric):
                if not d.contains(v):
                    a, b = d.bounds
                    t = math.log(v) if d.log_scale and v > 0 else (a if d.log_scale else float(v))
                    out[d.name] = d.from_coord(min(max(t, a), b))
            elif v not in d.choices:
                out[d.name] = d.choices[0]
        return out

    def encode(self, config: Configuration) -> np.ndarray:
        """Unit-cube encoding; categoricals one-hot."""
        parts: list[float] = []
        for d in self.dims:
            if isinstance(d, Numeric):
                parts.append(d.to_unit(config[d.name]))
            else:
                parts.extend(1.0 if c == config[d.name] else 0.0 for c in d.choices)
        return np.array(parts)

    def to_lines(self) -> list[str]:
        lines = []
        for d in self.dims:
            if isinstance(d, Numeric):
                kind = "int" if d.integer else "float"
                flags = " log" if d.log_scale else ""
                lines.append(f"{d.name} {kind} {d.lo!r} {d.hi!r}{flags}")
            else:
                lines.append(f"{d.name} cat {','.join(d.choices)}")
        return lines


def parse_space(lines: Iterable[str]) -> HyperparameterSpace:
    """Parse ``name type lo hi [int] [log]`` / ``name cat c1,c2,...`` lines."""
    dims: list[Dim] = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) >= 3 and fields[1] == "cat":
            dims.append(Categorical(fields[0], tuple(",".join(fields[2:]).split(","))))
            continue
        if len(fields) < 4:
            raise ValueError(f"line {lineno}: expected 'name type lo hi [int] [log]'")
        name, kind, lo, hi, *flags = fields
        if kind not in ("float", "real", "num", "int"):
            raise ValueError(f"line {lineno}: unknown type {kind!r}")
        bad = set(flags) - {"int", "log"}
        if bad:
            raise ValueError(f"line {lineno}: unknown flag(s) {sorted(bad)}")
        dims.append(Numeric(name, float(lo), float(hi), integer=kind == "int" or "int" in flags,
                            log_scale="log" in flags))
    return HyperparameterSpace(tuple(dims))


def load_space(path) -> HyperparameterSpace:
    with open(path, encoding="utf-8") as fh:
        return parse_space(fh)


def lhs_sample(space: HyperparameterSpace, r: int, seed: int | np.random.Generator = 0
               ) -> list[Configuration]:
    """Latin hypercube sample of ``r`` configurations.

    Every numeric dimension is cut into ``r`` equal strata (in log space for
    log-scale dims) and each stratum receives exactly one point. Categorical
    dimensions are balanced: choice counts differ by at most one.
    """
    if r < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(seed)
    configs: list[Configuration] = [{} for _ in range(r)]
    for d in space.dims:
        if isinstance(d, Numeric):
            a, b = d.bounds
            strata = rng.permutation(r)
            u = rng.random(r)
            coords = a + (strata + u) / r * (b - a)
            for i in range(r):
                configs[i][d.name] = d.from_coord(float(coords[i]))
        else:
            order = [d.choices[i] for i in rng.permutation(len(d.choices))]
            seq = (order * math.ceil(r / len(order)))[:r]
            for i, j in enumerate(rng.permutation(r)):
                configs[i][d.name] = seq[j]
    return configs


def uniform_sample(space: HyperparameterSpace, n: int, seed: int | np.random.Generator = 0
                   ) -> list[Configuration]:
    """Independent uniform draws (log-uniform for log-scale dims)."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        cfg: Configuration = {}
        for d in space.dims:
            if isinstance(d, Numeric):
                a, b = d.bounds
                cfg[d.name] = d.from_coord(float(rng.uniform(a, b)))
            else:
                cfg[d.name] = d.choices[int(rng.integers(len(d.choices)))]
        out.append(cfg)
    return out


def trim_space(space: HyperparameterSpace, best: Configuration, alpha: float
               ) -> HyperparameterSpace:
    """Shrink every numeric range to ``1 - alpha`` of its width around ``best``.

    The window is centred on ``best`` and slid (never clipped) back inside
    the original range. Categorical dims collapse to ``best``'s choice when
    ``alpha >= 0.5``.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    dims: list[Dim] = []
    for d in space.dims:
        value = best[d.name]
        if isinstance(d, Categorical):
            if value not in d.choices:
                raise ValueError(f"{d.name}: best value {value!r} not in space")
            dims.append(Categorical(d.name, (value,)) if alpha >= 0.5 else d)
            continue
        if not d.contains(value):
            raise ValueError(f"{d.name}: best value {value!r} outside [{d.lo}, {d.hi}]")
        a, b = d.bounds
        width = (1 - alpha) * (b - a)
        c = math.log(value) if d.log_scale else float(value)
        lo_t = c - width / 2
        hi_t = lo_t + width
        lo_exact = hi_exact = None
        if lo_t < a:
            lo_t, hi_t = a, a + width
            lo_exact = d.lo
        elif hi_t > b:
            lo_t, hi_t = b - width, b
            hi_exact = d.hi
        lo = lo_exact if lo_exact is not None else (math.exp(lo_t) if d.log_scale else lo_t)
        hi = hi_exact if hi_exact is not None else (math.exp(hi_t) if d.log_scale else hi_t)
        lo = max(lo, d.lo)
        hi = min(hi, d.hi)
        # guard against rounding pushing best a hair outside
        lo = min(lo, value)
        hi = max(hi, value)
        dims.append(Numeric(d.name, lo, hi, d.integer, d.log_scale))
    return HyperparameterSpace(tuple(dims))
