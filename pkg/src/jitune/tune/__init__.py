from ..space import (
    Categorical,
    Configuration,
    HyperparameterSpace,
    Numeric,
    lhs_sample,
    load_space,
    parse_space,
    trim_space,
    uniform_sample,
)
from .baselines import GaussianProcess, expected_improvement, tune_gp, tune_random
from .budget import BudgetError, TuningBudget, compute_rounds, exact
from .jitune import TuneResult, synopsis_task, tune_jitune
from .runner import RoundClock, TrialRunner, WallClock, trial_seed
from .trials import Trial, TrialLog
