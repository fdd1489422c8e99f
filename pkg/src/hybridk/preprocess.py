"""Regime handling before the main search: coverage-like and median-like
shortcuts, the optimum guess ladder, and aspect-ratio discretization with a
budget-splitting dynamic program over connected components.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import BudgetExceededError, InfeasibleError, RegimeError
from .geometry import (
    PointSet,
    Solution,
    as_points,
    cost,
    grid_points,
    max_pairwise_distance,
    min_nonzero_distance,
    nearest_center_distances,
)

__all__ = [
    "OptGuess",
    "ComponentDecomposition",
    "opt_guess_ladder",
    "gonzalez_kcenter",
    "solve_center_like",
    "reduce_to_kmedian",
    "discretize",
    "combine_components",
]


@dataclass(frozen=True)
class OptGuess:
    """One rung of the geometric ladder of optimum-value estimates."""

    value: float
    index: int


@dataclass(frozen=True)
class ComponentDecomposition:
    """Connected components of the snapped point multiset.

    ``components[i]`` holds the snapped points of component i;
    ``component_indices[i]`` the positions of those points in the input order.
    """

    components: list[PointSet]
    component_indices: list[np.ndarray]
    snapped: PointSet
    snap_cell: float


def opt_guess_ladder(P, k: int, r: float, eps: float) -> list[OptGuess]:
    """Geometric sequence of optimum estimates, ratio 2, covering the range
    from eps*d_min/(2n) up to n*d_max.

    Degenerate inputs (fewer than two points, or all points coincident)
    collapse to the single guess 0.
    """
    P = as_points(P)
    n = P.shape[0]
    d_min = min_nonzero_distance(P)
    if n < 2 or d_min == 0.0:
        return [OptGuess(0.0, 0)]
    d_max = max_pairwise_distance(P)
    lo = eps * d_min / (2 * n)
    hi = n * d_max
    values = [lo]
    while values[-1] < hi:
        values.append(values[-1] * 2)
    return [OptGuess(v, i) for i, v in enumerate(values)]


def gonzalez_kcenter(P, k: int) -> tuple[PointSet, float]:
    """Farthest-first traversal seeded at index 0.

    Returns the chosen centers and the covering radius, which is at most
    twice the optimal k-center radius. Stops early once every point
    coincides with a center (k at least the number of distinct points).
    """
    P = as_points(P)
    n = P.shape[0]
    if n < 1:
        raise ValueError("point set must be non-empty")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    chosen = [0]
    dists = np.linalg.norm(P - P[0], axis=1)
    while len(chosen) < k:
        nxt = int(np.argmax(dists))
        if dists[nxt] == 0.0:
            break
        chosen.append(nxt)
        dists = np.minimum(dists, np.linalg.norm(P - P[nxt], axis=1))
    return P[chosen], float(dists.max())


def _best_subset(P: np.ndarray, candidates: np.ndarray, k: int, r: float, z: int, budget: int):
    """Minimum-cost subset of at most k candidates, scanned in lexicographic
    order; stops early on an exact zero. Pipeline-side twin of the oracle's
    enumeration, kept separate so the two never share bugs.
    """
    m = candidates.shape[0]
    kk = min(k, m)
    if math.comb(m, kk) > budget:
        raise BudgetExceededError(
            f"C({m}, {kk}) = {math.comb(m, kk)} candidate subsets exceeds the budget of {budget}"
        )
    V = np.maximum(np.linalg.norm(P[:, None, :] - candidates[None, :, :], axis=2) - r, 0.0) ** z
    best_cost = np.inf
    best: tuple[int, ...] = ()
    if kk == m:
        return float(V.min(axis=1).sum()), tuple(range(m))
    if kk == 1:
        sums = V.sum(axis=0)
        i = int(np.argmin(sums))
        return float(sums[i]), (i,)
    if kk == 2:
        for i in range(m - 1):
            costs = np.minimum(V[:, i, None], V[:, i + 1 :]).sum(axis=0)
            j = int(np.argmin(costs))
            if costs[j] < best_cost:
                best_cost = float(costs[j])
                best = (i, i + 1 + j)
                if best_cost == 0.0:
                    return best_cost, best
        return best_cost, best
    if kk == 3:
        for i in range(m - 2):
            vi = V[:, i]
            for j in range(i + 1, m - 1):
                costs = np.minimum(np.minimum(vi, V[:, j])[:, None], V[:, j + 1 :]).sum(axis=0)
                l = int(np.argmin(costs))
                if costs[l] < best_cost:
                    best_cost = float(costs[l])
                    best = (i, j, j + 1 + l)
                    if best_cost == 0.0:
                        return best_cost, best
        return best_cost, best
    for combo in itertools.combinations(range(m), kk):
        c = float(V[:, list(combo)].min(axis=1).sum())
        if c < best_cost:
            best_cost = c
            best = combo
            if c == 0.0:
                break
    return best_cost, best


def solve_center_like(
    P,
    k: int,
    r: float,
    eps: float,
    *,
    z: int = 1,
    enum_budget: int = 2_000_000,
    grid_cap: int = 4096,
) -> Solution | None:
    """Coverage-regime solver: grids around a farthest-first cover.

    Applies when every point sits within 4r of the farthest-first centers;
    returns None otherwise. The candidate grids use spacing eps*r, coarsened
    (and the achieved slack folded into the radius factor) when the subset
    budget would otherwise be exceeded.
    """
    P = as_points(P)
    if r <= 0:
        raise ValueError("solve_center_like requires r > 0")
    g_centers, g_radius = gonzalez_kcenter(P, k)
    if g_radius > 4 * r:
        return None

    d = P.shape[1]
    lam = 6 * r
    tau = eps * r
    # Largest candidate count whose subset enumeration fits the budget.
    m_cap = k
    while math.comb(m_cap + 1, min(k, m_cap + 1)) <= enum_budget and m_cap < 1_000_000:
        m_cap += 1
    kc = g_centers.shape[0]
    while True:
        per_dim = 2 * lam * np.sqrt(d) / tau + 1
        if kc * per_dim**d <= min(m_cap, kc * grid_cap) or tau >= lam:
            break
        tau *= 1.3
    tau = min(tau, lam)

    # Cheap deterministic seeds: the traversal centers and per-cluster means.
    owner, _ = nearest_center_distances(P, g_centers)
    means = np.vstack([P[owner == i].mean(axis=0) for i in range(kc)])
    seed_cost = cost(P, means, r, z)
    achieved_factor = 1.0 + max(eps, tau / r)
    if seed_cost == 0.0:
        return Solution(means, 1.0 + eps, cost(P, means, (1.0 + eps) * r, z))

    grids = [grid_points(c, lam, tau) for c in g_centers]
    R = np.unique(np.vstack(grids + [g_centers, means]), axis=0)
    best_cost, combo = _best_subset(P, R, k, r, z, enum_budget)
    centers = R[list(combo)]
    return Solution(centers, achieved_factor, cost(P, centers, achieved_factor * r, z))


def reduce_to_kmedian(P, k: int, r: float, eps: float, kmedian_solver, *, z: int = 1) -> Solution:
    """Median-regime reduction: solve at radius zero, rescore at radius r.

    ``kmedian_solver(P, k)`` must return an approximately optimal center set
    for the radius-zero problem; the guarantee transfers whenever the optimum
    dominates 2nr/eps.
    """
    P = as_points(P)
    centers = as_points(kmedian_solver(P, k), name="centers")
    return Solution(centers, 1.0, cost(P, centers, r, z))


def discretize(P, k: int, r: float, eps: float, opt_guess: float) -> ComponentDecomposition:
    """Snap points to a grid and split them into far-apart components.

    Requires the regime eps*opt_guess/(2n) <= r <= opt_guess. Components are
    connected under edges of length at most 2*(opt_guess + r); each point is
    replaced by the center of its cell of side eps*opt_guess/(sqrt(d)*n).
    """
    P = as_points(P)
    n, d = P.shape
    if opt_guess <= 0 or not np.isfinite(opt_guess):
        raise RegimeError(f"opt_guess must be positive, got {opt_guess!r}")
    lo = eps * opt_guess / (2 * n)
    if not (lo <= r <= opt_guess):
        raise RegimeError(
            f"discretize needs {lo:.6g} <= r <= {opt_guess:.6g}, got r={r:.6g}"
        )

    threshold = 2.0 * (opt_guess + r)
    D = np.linalg.norm(P[:, None, :] - P[None, :, :], axis=2)
    parent = np.arange(n)

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if D[i, j] <= threshold:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)

    side = eps * opt_guess / (np.sqrt(d) * n)
    snapped = (np.floor(P / side) + 0.5) * side

    roots = np.array([find(i) for i in range(n)])
    comp_ids = np.unique(roots)
    component_indices = [np.flatnonzero(roots == c) for c in comp_ids]
    components = [snapped[idx] for idx in component_indices]
    return ComponentDecomposition(
        components=components,
        component_indices=component_indices,
        snapped=snapped,
        snap_cell=float(side),
    )


def combine_components(tables, k: int) -> list[int]:
    """Split a budget of k centers across components to minimize total cost.

    ``tables[c][b]`` is the best known cost for component c with exactly b
    centers, b = 0..k (infinite where undefined). Returns the minimizing
    budget per component; ties prefer smaller budgets for earlier components.
    """
    rows = [np.asarray(row, dtype=float) for row in tables]
    for row in rows:
        if row.shape != (k + 1,):
            raise ValueError(f"each table row must have k+1 = {k + 1} entries, got {row.shape}")
    nc = len(rows)
    if nc == 0:
        raise ValueError("need at least one component")

    dp = np.full((nc + 1, k + 1), np.inf)
    choice = np.zeros((nc + 1, k + 1), dtype=int)
    dp[0, :] = 0.0
    for c in range(1, nc + 1):
        for b in range(k + 1):
            for a in range(b + 1):
                v = dp[c - 1, b - a] + rows[c - 1][a]
                if v < dp[c, b]:
                    dp[c, b] = v
                    choice[c, b] = a
    if not np.isfinite(dp[nc, k]):
        raise InfeasibleError(
            f"no feasible split of {k} centers across {nc} components"
        )
    alloc = []
    b = k
    for c in range(nc, 0, -1):
        a = int(choice[c, b])
        alloc.append(a)
        b -= a
    alloc.reverse()
    return alloc
