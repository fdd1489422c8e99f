"""Independent brute-force solvers used as ground truth for approximation claims.

Nothing here shares code with the approximation pipeline. Two exact engines
compute the minimum cost over size-<=k subsets of a finite candidate set:

* plain lexicographic enumeration of candidate subsets (the reference route,
  refused above its evaluation budget), and
* a partition dynamic program over point subsets, usable when n is small. It
  returns the same minimum value because the best cost over center subsets
  equals the best, over partitions of the points, of the sum of per-part
  single-center optima.

Optionally a run also evaluates every subset at an inflated radius, which
yields a certified lower bound on the continuous optimum: snapping any
continuous solution to the grid moves each center by at most the coverage
radius, so the grid optimum at radius r + resolution cannot exceed it.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import BudgetExceededError
from .geometry import PointSet, as_points

__all__ = [
    "OracleResult",
    "DEFAULT_ENUM_BUDGET",
    "brute_force_discrete",
    "brute_force_continuous",
    "one_median_exact",
]

DEFAULT_ENUM_BUDGET = 50_000_000
# Partition-DP guards: number of points and (candidates x subsets) work.
DP_MAX_POINTS = 14
DP_MAX_WORK = 800_000_000
# Above this many subsets the generic python combination loop is impractical.
GENERIC_LOOP_LIMIT = 2_000_000


@dataclass(frozen=True)
class OracleResult:
    centers: PointSet
    cost: float
    candidate_count: int
    grid_resolution: float | None = None
    lower_bound: float | None = None


def _value_matrix(P: np.ndarray, candidates: np.ndarray, r: float, z: int) -> np.ndarray:
    """(n, m) table of per-point, per-candidate thresholded costs."""
    D = np.linalg.norm(P[:, None, :] - candidates[None, :, :], axis=2)
    return np.maximum(D - r, 0.0) ** z


class _Best:
    """Running strict minimum; first hit wins, which keeps lexicographic order."""

    __slots__ = ("cost", "combo")

    def __init__(self):
        self.cost = np.inf
        self.combo: tuple[int, ...] = ()

    def offer(self, c: float, combo: tuple[int, ...]) -> None:
        if c < self.cost:
            self.cost = c
            self.combo = combo


def _enumerate_min(tables: list[np.ndarray], k: int) -> list[_Best]:
    """Exact minimum over size-k candidate subsets for each cost table.

    Tables share shape (n, m); subsets are scanned in lexicographic index
    order so the reported argmin is the lexicographically smallest minimizer.
    """
    m = tables[0].shape[1]
    bests = [_Best() for _ in tables]
    if k >= m:
        for W, best in zip(tables, bests):
            best.offer(float(W.min(axis=1).sum()), tuple(range(m)))
        return bests
    if k == 1:
        for W, best in zip(tables, bests):
            sums = W.sum(axis=0)
            i = int(np.argmin(sums))
            best.offer(float(sums[i]), (i,))
        return bests
    if k == 2:
        for W, best in zip(tables, bests):
            for i in range(m - 1):
                costs = np.minimum(W[:, i, None], W[:, i + 1 :]).sum(axis=0)
                j = int(np.argmin(costs))
                best.offer(float(costs[j]), (i, i + 1 + j))
        return bests
    if k == 3:
        for W, best in zip(tables, bests):
            for i in range(m - 2):
                wi = W[:, i]
                for j in range(i + 1, m - 1):
                    base = np.minimum(wi, W[:, j])
                    costs = np.minimum(base[:, None], W[:, j + 1 :]).sum(axis=0)
                    l = int(np.argmin(costs))
                    best.offer(float(costs[l]), (i, j, j + 1 + l))
        return bests
    # Generic fallback for k >= 4; per-subset evaluation in lexicographic order.
    for combo in itertools.combinations(range(m), k):
        cols = list(combo)
        for W, best in zip(tables, bests):
            best.offer(float(W[:, cols].min(axis=1).sum()), combo)
    return bests


def _subset_single_center(V: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Best single-candidate cost (and its candidate) for every point subset.

    V has shape (m, n) with n <= DP_MAX_POINTS. Walks subsets in Gray-code
    order keeping a running per-candidate sum, refreshing periodically so
    float drift cannot accumulate.
    """
    m, n = V.shape
    size = 1 << n
    cost1 = np.empty(size)
    argc = np.zeros(size, dtype=np.int64)
    cost1[0] = 0.0
    current = np.zeros(m)
    prev_gray = 0
    for t in range(1, size):
        gray = t ^ (t >> 1)
        bit = (gray ^ prev_gray).bit_length() - 1
        if gray & (1 << bit):
            current += V[:, bit]
        else:
            current -= V[:, bit]
        if t % 1024 == 0:
            bits = [b for b in range(n) if gray & (1 << b)]
            current = V[:, bits].sum(axis=1) if bits else np.zeros(m)
        i = int(np.argmin(current))
        cost1[gray] = current[i]
        argc[gray] = i
        prev_gray = gray
    return cost1, argc


def _dp_min(V: np.ndarray, k: int) -> tuple[float, list[int]]:
    """Exact minimum over size-<=k candidate subsets via point-partition DP."""
    m, n = V.shape
    full = (1 << n) - 1
    cost1, argc = _subset_single_center(V)
    if k == 1 or full == 0:
        return float(cost1[full]), [int(argc[full])]
    if k == 2:
        comp = cost1[::-1]  # cost1[full ^ s] when s runs 0..full
        tot = cost1 + comp
        s = int(np.argmin(tot))
        masks = [s, full ^ s]
        cands = sorted({int(argc[msk]) for msk in masks if msk})
        return float(tot[s]), cands
    if k == 3:
        dp2 = np.empty(full + 1)
        split = np.zeros(full + 1, dtype=np.int64)
        dp2[0] = 0.0
        c1 = cost1  # local alias, hot loop
        for t in range(1, full + 1):
            low = t & (-t)
            # Only submasks containing the lowest bit; the complement covers the rest.
            best = c1[t]
            best_u = t
            u = t
            while u:
                if u & low:
                    v = c1[u] + c1[t ^ u]
                    if v < best:
                        best = v
                        best_u = u
                u = (u - 1) & t
            dp2[t] = best
            split[t] = best_u
        tot = cost1 + dp2[::-1]
        s = int(np.argmin(tot))
        rest = full ^ s
        u = int(split[rest]) if rest else 0
        masks = [s, u, rest ^ u]
        cands = sorted({int(argc[msk]) for msk in masks if msk})
        return float(tot[s]), cands
    raise BudgetExceededError(f"partition DP supports k <= 3, got k={k}")


def brute_force_discrete(
    P,
    k: int,
    r: float,
    z: int,
    candidates,
    *,
    budget: int = DEFAULT_ENUM_BUDGET,
    lb_radius: float | None = None,
    grid_resolution: float | None = None,
) -> OracleResult:
    """Exact minimum of the hybrid cost over all size-<=k subsets of candidates.

    Refuses (never truncates) when the subset count exceeds ``budget`` and the
    partition DP is out of reach. With ``lb_radius`` set, also reports the
    exact minimum over the same subsets at that inflated radius as
    ``lower_bound``.
    """
    P = as_points(P)
    candidates = as_points(candidates, name="candidates")
    m = candidates.shape[0]
    n = P.shape[0]
    if m < 1:
        raise ValueError("candidate set must be non-empty")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    kk = min(k, m)
    n_subsets = math.comb(m, kk)

    enum_ok = n_subsets <= budget and (kk <= 3 or n_subsets <= GENERIC_LOOP_LIMIT)
    dp_ok = kk <= 3 and n <= DP_MAX_POINTS and m * (1 << n) <= DP_MAX_WORK

    tables = [_value_matrix(P, candidates, r, z)]
    if lb_radius is not None:
        tables.append(_value_matrix(P, candidates, lb_radius, z))

    if enum_ok:
        bests = _enumerate_min(tables, kk)
        centers = candidates[list(bests[0].combo)]
        best_cost = bests[0].cost
        lb = bests[1].cost if lb_radius is not None else None
    elif dp_ok:
        best_cost, cand_idx = _dp_min(tables[0].T.copy(), kk)
        centers = candidates[cand_idx]
        lb = _dp_min(tables[1].T.copy(), kk)[0] if lb_radius is not None else None
    else:
        raise BudgetExceededError(
            f"C({m}, {kk}) = {n_subsets} subsets exceeds the enumeration budget of "
            f"{budget} and the instance is too large for the partition DP"
        )

    return OracleResult(
        centers=centers,
        cost=float(best_cost),
        candidate_count=m,
        grid_resolution=grid_resolution,
        lower_bound=None if lb is None else float(lb),
    )


def _box_grid(lo: np.ndarray, hi: np.ndarray, spacing: float, max_candidates: int) -> np.ndarray:
    counts = np.maximum(np.ceil((hi - lo) / spacing).astype(np.int64), 1)
    total = int(np.prod(counts.astype(float)))
    if total > max_candidates:
        raise BudgetExceededError(
            f"grid would have {total} candidates, above the cap of {max_candidates}; "
            "use a coarser resolution"
        )
    axes = [l + spacing * (np.arange(c) + 0.5) for l, c, in zip(lo, counts)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack(mesh, axis=-1).reshape(-1, len(lo))


def brute_force_continuous(
    P,
    k: int,
    r: float,
    z: int,
    resolution: float,
    *,
    budget: int = DEFAULT_ENUM_BUDGET,
    max_candidates: int = 6_000_000,
    certify_lower: bool = False,
) -> OracleResult:
    """Grid-restricted optimum over the bounding box of P inflated by r.

    The grid's coverage radius is at most ``resolution``, so for z=1 the
    returned cost is within additive n*resolution of the true continuous
    optimum. With ``certify_lower`` the result carries a certified lower bound
    on the continuous optimum (the same subsets scored at radius
    r + resolution).
    """
    P = as_points(P)
    if not np.isfinite(resolution) or resolution <= 0:
        raise ValueError(f"resolution must be positive, got {resolution!r}")
    d = P.shape[1]
    lo = P.min(axis=0) - r
    hi = P.max(axis=0) + r
    spacing = 2.0 * resolution / np.sqrt(d)
    candidates = _box_grid(lo, hi, spacing, max_candidates)
    achieved = spacing * np.sqrt(d) / 2.0
    try:
        return brute_force_discrete(
            P,
            k,
            r,
            z,
            candidates,
            budget=budget,
            lb_radius=(r + achieved) if certify_lower else None,
            grid_resolution=float(achieved),
        )
    except BudgetExceededError as exc:
        raise BudgetExceededError(f"{exc}; use a coarser resolution") from exc


def one_median_exact(X, resolution: float, z: int = 1, **kwargs) -> tuple[np.ndarray, float]:
    """Grid-exact single-center optimum at r=0; additive error <= |X|*resolution."""
    X = as_points(X)
    if X.shape[0] < 1:
        raise ValueError("point set must be non-empty")
    res = brute_force_continuous(X, 1, 0.0, z, resolution, **kwargs)
    return res.centers[0], res.cost
