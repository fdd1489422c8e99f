"""Hybrid k-clustering: place k balls of radius r, pay the summed distance of
uncovered points to their nearest ball.

The library exposes exact geometric primitives, independent brute-force
oracles, the bicriteria approximation pipeline, an sklearn-style estimator,
and the ``hybridk`` command line tool.
"""

from .errors import BudgetExceededError, InfeasibleError, ParseError, RegimeError
from .geometry import (
    Assignment,
    CostReport,
    Instance,
    Solution,
    as_point,
    as_points,
    assign_clusters,
    cost,
    dist,
    dist_r,
    evaluate_solution,
    grid_points,
    max_pairwise_distance,
)
from .solver import AlgoConfig, SearchState, full_pipeline, hybrid_clustering

__version__ = "0.1.0"

__all__ = [
    "AlgoConfig",
    "Assignment",
    "BudgetExceededError",
    "CostReport",
    "HybridKClustering",
    "InfeasibleError",
    "Instance",
    "ParseError",
    "RegimeError",
    "SearchState",
    "Solution",
    "as_point",
    "as_points",
    "assign_clusters",
    "cost",
    "dist",
    "dist_r",
    "evaluate_solution",
    "full_pipeline",
    "grid_points",
    "hybrid_clustering",
    "max_pairwise_distance",
]


def __getattr__(name):
    # Deferred so that importing the CLI does not pull in scikit-learn.
    if name == "HybridKClustering":
        from .estimator import HybridKClustering

        return HybridKClustering
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")
