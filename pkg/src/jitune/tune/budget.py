from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction


def exact(x) -> Fraction:
    """Exact rational for the decimal a number prints as (0.1 -> 1/10)."""
    if isinstance(x, (Fraction, int)):
        return Fraction(x)
    return Fraction(repr(float(x)))


class BudgetError(ValueError):
    """The time budget cannot pay for the timing run plus one original-graph run."""


@dataclass(frozen=True)
class TuningBudget:
    """Round accounting for one tuning run.

    ``total`` (T) and ``t_g`` share a unit: seconds, or original-run
    equivalents when the budget was given as a round count (then
    ``t_g == 1``).
    """

    total: float
    t_g: float
    rounds: int
    rho: float
    synopsis_rounds: int
    phase2_reserve: float

    @property
    def original_rounds(self) -> int:
        """Original-graph runs charged up front: the timing run plus half of R."""
        return 1 + self.rounds // 2

    def accounted(self) -> Fraction:
        """(1 + floor(R/2)) t_G + r t_G rho, computed exactly."""
        t = exact(self.t_g)
        return self.original_rounds * t + self.synopsis_rounds * t * exact(self.rho)

    def holds(self) -> bool:
        """Budget identity: accounted <= T < accounted + t_G rho."""
        t = exact(self.t_g)
        acc = self.accounted()
        return acc <= exact(self.total) < acc + t * exact(self.rho)


def compute_rounds(total: float, t_g: float, rho: float) -> TuningBudget:
    """Split a budget T into R = floor(T / t_G) and the synopsis round count r.

    ``r`` solves T = (1 + floor(R/2)) t_G + r t_G rho for the largest
    integer that does not overspend. Arithmetic is exact on the decimal
    values the inputs print as, so T=50, rho=0.1 gives r=240 rather than
    the 239 that the binary value of 0.1 would give.
    """
    if not t_g > 0:
        raise BudgetError("t_G must be positive")
    if not 0 < rho <= 1:
        raise ValueError(f"rho must lie in (0, 1], got {rho}")
    T, t, p = exact(total), exact(t_g), exact(rho)
    if T < 2 * t:
        raise BudgetError(f"budget {total} is below two runs of {t_g}")
    R = math.floor(T / t)
    r = math.floor((T / t - 1 - R // 2) / p)
    reserve = T - (1 + R // 2) * t - r * t * p
    return TuningBudget(float(total), float(t_g), R, float(rho), r, float(reserve))
