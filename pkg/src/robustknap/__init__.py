"""Deletion-robust streaming summaries for submodular maximization under knapsack constraints."""

__version__ = "0.1.0"

from .core import (GroundElement, InvalidInstanceError, KnapsackInstance, Objective, Solution,
                   is_feasible, marginal_density, marginal_gain, normalize)
from .grid import (BucketGrid, GridParams, RobustSummary, algmult_run, algnum_run, algsize_run,
                   make_params, prune)
from .ladder import GuessLadder, guess_ladder_run, robust_query
from .offline import brute_force_opt, offline_greedy, opt_upper_bound

__all__ = [
    "BucketGrid", "GridParams", "GroundElement", "GuessLadder", "InvalidInstanceError",
    "KnapsackInstance", "Objective", "RobustSummary", "Solution", "algmult_run", "algnum_run",
    "algsize_run", "brute_force_opt", "guess_ladder_run", "is_feasible", "make_params",
    "marginal_density", "marginal_gain", "normalize", "offline_greedy", "opt_upper_bound",
    "prune", "robust_query",
]
