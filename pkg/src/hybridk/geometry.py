"""Exact geometric primitives: thresholded distances, the hybrid cost, cluster
assignment, and grid candidate generation.

Everything here is a pure function over immutable numpy inputs. Points are
float arrays of shape (d,), point sets are arrays of shape (n, d). A 1-d array
passed where a point set is expected is interpreted as n points on a line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Point",
    "PointSet",
    "Instance",
    "Solution",
    "Assignment",
    "CostReport",
    "as_point",
    "as_points",
    "dist",
    "dist_r",
    "cost",
    "assign_clusters",
    "nearest_center_distances",
    "grid_points",
    "max_pairwise_distance",
    "min_nonzero_distance",
    "evaluate_solution",
]

Point = np.ndarray
PointSet = np.ndarray


def as_point(p, *, name: str = "point") -> Point:
    """Coerce ``p`` to a finite float vector of shape (d,)."""
    arr = np.asarray(p, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty coordinate vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite coordinates")
    return arr


def as_points(X, *, name: str = "points") -> PointSet:
    """Coerce ``X`` to a finite float array of shape (n, d).

    A 1-d input is treated as n points in one dimension.
    """
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2-d array of shape (n, d), got shape {arr.shape}")
    if arr.shape[1] == 0:
        raise ValueError(f"{name} must have dimension d >= 1")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite coordinates")
    return arr


@dataclass(frozen=True)
class Instance:
    """One clustering problem: points, center budget k, ball radius r, power z."""

    points: PointSet
    k: int
    r: float
    z: int = 1

    def __post_init__(self):
        object.__setattr__(self, "points", as_points(self.points))
        if self.points.shape[0] == 0:
            raise ValueError("instance needs at least one point")
        if not isinstance(self.k, (int, np.integer)) or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k!r}")
        if not np.isfinite(self.r) or self.r < 0:
            raise ValueError(f"r must be a finite non-negative real, got {self.r!r}")
        if self.z not in (1, 2):
            raise ValueError(f"z must be 1 or 2, got {self.z!r}")

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class Solution:
    """A center set together with the radius factor it was scored at.

    ``source`` names the route that produced the centers ("pipeline",
    "center_like", "kmedian_reduce", or "oracle").
    """

    centers: PointSet
    radius_factor: float
    cost: float
    source: str = "pipeline"

    def __post_init__(self):
        if len(self.centers):
            object.__setattr__(self, "centers", as_points(self.centers, name="centers"))


@dataclass(frozen=True)
class Assignment:
    """Per-point owner index and the per-point thresholded cost."""

    owner: np.ndarray
    per_point_cost: np.ndarray


@dataclass(frozen=True)
class CostReport:
    """Full evaluation of a center set: assignment, coverage split, total."""

    owner: np.ndarray
    per_point_cost: np.ndarray
    covered: np.ndarray
    covered_count: int
    total_cost: float
    effective_radius: float


def dist(p, q) -> float:
    """Euclidean distance between two points of equal dimension."""
    pa = as_point(p, name="p")
    qa = as_point(q, name="q")
    if pa.shape != qa.shape:
        raise ValueError(f"dimension mismatch: {pa.shape[0]} vs {qa.shape[0]}")
    # math.dist scales internally, so it stays exact even for denormal gaps.
    return math.dist(pa.tolist(), qa.tolist())


def _check_r_z(r: float, z: int) -> None:
    if not np.isfinite(r) or r < 0:
        raise ValueError(f"r must be a finite non-negative real, got {r!r}")
    if z not in (1, 2):
        raise ValueError(f"z must be 1 or 2, got {z!r}")


def dist_r(p, q, r: float, z: int = 1) -> float:
    """Thresholded distance max(d(p, q) - r, 0) raised to the power z."""
    _check_r_z(r, z)
    base = max(dist(p, q) - r, 0.0)
    return float(base**z)


def nearest_center_distances(P: PointSet, F) -> tuple[np.ndarray, np.ndarray]:
    """Owner index (lowest index wins ties) and distance to it, per point."""
    P = as_points(P)
    F = as_points(F, name="centers")
    if F.shape[0] == 0:
        raise ValueError("center set must be non-empty")
    if F.shape[1] != P.shape[1]:
        raise ValueError(f"dimension mismatch: points are {P.shape[1]}-d, centers are {F.shape[1]}-d")
    # (n, m) distance table; fine at the linear-scan scales this library targets.
    D = np.linalg.norm(P[:, None, :] - F[None, :, :], axis=2)
    owner = np.argmin(D, axis=1)  # argmin keeps the first minimum, our tie rule
    return owner, D[np.arange(P.shape[0]), owner]


def cost(P, F, r: float, z: int = 1) -> float:
    """Total hybrid cost: sum over points of max(d(p, F) - r, 0)^z."""
    _check_r_z(r, z)
    P = as_points(P)
    if P.shape[0] == 0:
        return 0.0
    _, dmin = nearest_center_distances(P, F)
    return float(np.sum(np.maximum(dmin - r, 0.0) ** z))


def assign_clusters(P, F, r: float = 0.0, z: int = 1) -> Assignment:
    """Partition points by nearest center, ties to the lowest center index."""
    _check_r_z(r, z)
    owner, dmin = nearest_center_distances(P, F)
    return Assignment(owner=owner, per_point_cost=np.maximum(dmin - r, 0.0) ** z)


def evaluate_solution(P, F, r: float, z: int = 1, radius_factor: float = 1.0) -> CostReport:
    """Score a center set at an inflated radius and report the coverage split."""
    _check_r_z(r, z)
    if radius_factor < 0 or not np.isfinite(radius_factor):
        raise ValueError(f"radius_factor must be finite and non-negative, got {radius_factor!r}")
    owner, dmin = nearest_center_distances(P, F)
    eff_r = radius_factor * r
    per_point = np.maximum(dmin - eff_r, 0.0) ** z
    covered = dmin <= eff_r
    return CostReport(
        owner=owner,
        per_point_cost=per_point,
        covered=covered,
        covered_count=int(np.sum(covered)),
        total_cost=float(np.sum(per_point)),
        effective_radius=float(eff_r),
    )


def grid_points(
    p,
    lam: float,
    tau: float,
    offset_mode: str = "origin",
    *,
    max_cells: int = 20_000_000,
) -> PointSet:
    """Cell centers of every grid cell of side tau/sqrt(d) meeting the ball B(p, lam).

    Cells are half-open boxes [lo, hi). With ``offset_mode="origin"`` the grid
    is anchored at the coordinate origin (deterministic across calls); with
    ``"point"`` it is anchored at p. Every point of B(p, lam) is within tau of
    some returned center, and the output has at most
    (ceil(2*lam*sqrt(d)/tau) + 1)^d points.
    """
    pa = as_point(p, name="p")
    d = pa.shape[0]
    if not np.isfinite(tau) or tau <= 0:
        raise ValueError(f"tau must be positive, got {tau!r}")
    if not np.isfinite(lam) or tau > lam:
        raise ValueError(f"need 0 < tau <= lam, got tau={tau!r}, lam={lam!r}")
    if offset_mode not in ("origin", "point"):
        raise ValueError(f"offset_mode must be 'origin' or 'point', got {offset_mode!r}")

    side = tau / np.sqrt(d)
    anchor = np.zeros(d) if offset_mode == "origin" else pa
    u = pa - anchor

    lo_idx = np.floor((u - lam) / side).astype(np.int64)
    hi_idx = np.floor((u + lam) / side).astype(np.int64)
    counts = hi_idx - lo_idx + 1
    total = int(np.prod(counts.astype(float)))
    if total > max_cells:
        raise ValueError(
            f"grid would have {total} cells, above the max_cells guard of {max_cells}; "
            "use a coarser tau"
        )

    axes = [np.arange(lo, hi + 1) for lo, hi in zip(lo_idx, hi_idx)]
    idx = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)

    lo = idx * side
    hi = (idx + 1) * side
    nearest = np.clip(u, lo, hi)
    dist2 = np.sum((u - nearest) ** 2, axis=1)
    lam2 = lam * lam
    # Half-open cells: a cell whose closest approach is exactly lam, attained
    # only on its excluded upper face, contains no point of the ball.
    on_upper = np.any(nearest == hi, axis=1)
    keep = (dist2 < lam2) | ((dist2 == lam2) & ~on_upper)

    return anchor + (idx[keep] + 0.5) * side


def max_pairwise_distance(P) -> float:
    """Largest pairwise distance; 0 for a singleton."""
    P = as_points(P)
    n = P.shape[0]
    if n == 0:
        raise ValueError("point set must be non-empty")
    if n == 1:
        return 0.0
    D = np.linalg.norm(P[:, None, :] - P[None, :, :], axis=2)
    return float(D.max())


def min_nonzero_distance(P) -> float:
    """Smallest nonzero pairwise distance; 0 if all points coincide."""
    P = as_points(P)
    n = P.shape[0]
    if n < 2:
        return 0.0
    D = np.linalg.norm(P[:, None, :] - P[None, :, :], axis=2)
    positive = D[D > 0]
    return float(positive.min()) if positive.size else 0.0
