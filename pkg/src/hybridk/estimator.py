"""Scikit-learn style front end for the hybrid clustering pipeline."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin
from sklearn.exceptions import NotFittedError

from .geometry import Instance, as_points, evaluate_solution, nearest_center_distances
from .solver import AlgoConfig, full_pipeline

__all__ = ["HybridKClustering"]


class HybridKClustering(ClusterMixin, BaseEstimator):
    """Cover data with at most ``n_clusters`` balls of radius ``radius`` and
    minimize the summed (power ``power``) distance of uncovered points to
    their nearest ball.

    With ``radius=0`` this is k-median (``power=1``) or k-means-like
    (``power=2``) clustering; with a radius matching the k-center optimum the
    fitted cost drops to zero. The solver is a seeded randomized search whose
    output is reproducible for a fixed ``random_state``.

    Attributes set by :meth:`fit`: ``cluster_centers_``, ``labels_``,
    ``cost_``, ``radius_factor_``, ``covered_``, ``n_features_in_``.
    """

    def __init__(
        self,
        n_clusters: int = 2,
        radius: float = 0.0,
        power: int = 1,
        eps: float = 0.5,
        random_state: int | None = 0,
        mode: str = "practical",
        branch_cap: int = 400,
        subset_cap: int = 200,
        beta: int = 10,
        beta_prime: int | None = None,
        repetitions: int = 10,
        grid_cap: int = 256,
        guess_cap: int | None = None,
    ):
        self.n_clusters = n_clusters
        self.radius = radius
        self.power = power
        self.eps = eps
        self.random_state = random_state
        self.mode = mode
        self.branch_cap = branch_cap
        self.subset_cap = subset_cap
        self.beta = beta
        self.beta_prime = beta_prime
        self.repetitions = repetitions
        self.grid_cap = grid_cap
        self.guess_cap = guess_cap

    def _config(self) -> AlgoConfig:
        return AlgoConfig(
            eps=self.eps,
            seed=0 if self.random_state is None else int(self.random_state),
            beta=self.beta,
            beta_prime=self.beta_prime,
            branch_cap=self.branch_cap,
            subset_cap=self.subset_cap,
            repetitions=self.repetitions,
            mode=self.mode,
            grid_cap=self.grid_cap,
            guess_cap=self.guess_cap,
        )

    def fit(self, X, y=None):
        """Solve the instance defined by X and the constructor parameters."""
        X = as_points(X)
        instance = Instance(points=X, k=self.n_clusters, r=self.radius, z=self.power)
        solution = full_pipeline(instance, self._config())
        report = evaluate_solution(
            X, solution.centers, self.radius, self.power, solution.radius_factor
        )
        self.cluster_centers_ = solution.centers
        self.radius_factor_ = solution.radius_factor
        self.cost_ = solution.cost
        self.labels_ = report.owner
        self.covered_ = report.covered
        self.n_features_in_ = X.shape[1]
        return self

    def _check_fitted(self):
        if not hasattr(self, "cluster_centers_"):
            raise NotFittedError(
                "This HybridKClustering instance is not fitted yet; call fit first."
            )

    def predict(self, X):
        """Index of the nearest fitted center for each point."""
        self._check_fitted()
        X = as_points(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, but the estimator was fitted with "
                f"{self.n_features_in_}"
            )
        owner, _ = nearest_center_distances(X, self.cluster_centers_)
        return owner

    def transform(self, X):
        """Distances from each point to every fitted center."""
        self._check_fitted()
        X = as_points(X)
        return np.linalg.norm(X[:, None, :] - self.cluster_centers_[None, :, :], axis=2)

    def score(self, X, y=None):
        """Negative hybrid cost of the fitted centers on X (higher is better)."""
        self._check_fitted()
        X = as_points(X)
        report = evaluate_solution(
            X, self.cluster_centers_, self.radius, self.power, self.radius_factor_
        )
        return -report.total_cost
