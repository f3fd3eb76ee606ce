"""Just-in-time hyperparameter tuning for network embedding under a time budget."""

from .coarsen import build_chain, coarsen_level, extend_synopsis, kl_divergence
from .embed import get_embedder
from .evaluation import EvalResult, TaskData, evaluate, prepare_task
from .graph import Graph, load_edge_list, split_edges
from .tune import compute_rounds, lhs_sample, trim_space, tune_gp, tune_jitune, tune_random

__version__ = "0.1.0"
