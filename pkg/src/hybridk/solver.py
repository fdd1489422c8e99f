"""The randomized recursive search: candidate grids around chosen centers,
exponential search over faraway point sets, uniform sampling, subset medians,
and the full multi-candidate pipeline that stitches the preprocessing regimes
together.

All randomness flows through numpy Generators derived from explicit spawn
keys, so identical configurations reproduce identical solutions bit for bit,
and independent branches can run in any order.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import preprocess
from .errors import BudgetExceededError, InfeasibleError
from .geometry import (
    Instance,
    PointSet,
    Solution,
    as_points,
    grid_points,
    max_pairwise_distance,
    min_nonzero_distance,
    nearest_center_distances,
)

__all__ = [
    "AlgoConfig",
    "SearchState",
    "approx_solution_on_sample",
    "build_candidate_set",
    "hybrid_clustering",
    "full_pipeline",
]


@dataclass
class AlgoConfig:
    """Tunables for the search. Fields left at None resolve per instance:
    delta to eps/(10k), delta_prime to delta/3, beta_prime to min(|P_q|, 30*k*beta).

    Practical mode replaces the theory-sized grids and sample counts with the
    capped values below; theory mode uses the uncapped formulas and refuses
    to run when their sizes explode past ``theory_budget``.
    """

    eps: float = 0.5
    seed: int = 0
    delta: float | None = None
    delta_prime: float | None = None
    beta: int = 10
    beta_prime: int | None = None
    branch_cap: int = 400
    subset_cap: int = 200
    repetitions: int = 10
    mode: str = "practical"
    grid_cap: int = 256
    grid_radius_cap: float = 4.0
    q_level_cap: int = 24
    guess_cap: int | None = None
    median_pool_cap: int = 20_000
    center_enum_budget: int = 2_000_000
    theory_budget: int = 10_000_000

    def __post_init__(self):
        if not (0 < self.eps < 1):
            raise ValueError(f"eps must lie in (0, 1), got {self.eps!r}")
        if self.delta is not None and not (0 < self.delta < 0.5):
            raise ValueError(f"delta must lie in (0, 1/2), got {self.delta!r}")
        if self.beta < 1:
            raise ValueError("beta must be >= 1")
        if self.beta_prime is not None and self.beta_prime < self.beta:
            raise ValueError("beta_prime must be >= beta")
        for name in ("branch_cap", "subset_cap", "repetitions", "grid_cap", "q_level_cap"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.mode not in ("practical", "theory"):
            raise ValueError(f"mode must be 'practical' or 'theory', got {self.mode!r}")

    def resolved_delta(self, k: int) -> float:
        return self.delta if self.delta is not None else self.eps / (10 * k)

    def resolved_delta_prime(self, k: int) -> float:
        if self.delta_prime is not None:
            return self.delta_prime
        return self.resolved_delta(k) / 3.0


@dataclass
class SearchState:
    """One node of the recursion: centers chosen so far, remaining budget,
    and this node's private random stream."""

    chosen: PointSet
    remaining: int
    rng: np.random.Generator


def _threshold_cost(P: np.ndarray, F: np.ndarray, r: float, z: int) -> float:
    """Trusted-input hybrid cost; callers guarantee shapes and finiteness."""
    dmin = np.linalg.norm(P[:, None, :] - F[None, :, :], axis=2).min(axis=1)
    v = np.maximum(dmin - r, 0.0)
    if z == 2:
        v = v * v
    return float(v.sum())


def _weiszfeld_batch(S: np.ndarray, iterations: int = 30) -> np.ndarray:
    """Geometric-median refinement for a batch of samples, shape (b, m, d).

    Iterates landing on a data point are nudged off by 1e-9 of the sample
    diameter before reweighting.
    """
    diam = np.linalg.norm(S.max(axis=1) - S.min(axis=1), axis=1)
    c = S.mean(axis=1)
    live = diam > 0
    if not live.any():
        return c
    floor = np.where(live, 1e-12 * diam, 1.0)
    for _ in range(iterations):
        dvec = np.linalg.norm(S - c[:, None, :], axis=2)
        stuck = (dvec < floor[:, None]).any(axis=1) & live
        if stuck.any():
            c = c + np.where(stuck, 1e-9 * diam, 0.0)[:, None]
            dvec = np.linalg.norm(S - c[:, None, :], axis=2)
        # Dead rows (zero diameter) get weight 1 so nothing overflows; their
        # update is the mean, which is already the answer.
        w = 1.0 / np.maximum(dvec, np.where(live, 1e-300, 1.0)[:, None])
        new_c = (S * w[:, :, None]).sum(axis=1) / w.sum(axis=1)[:, None]
        c = np.where(live[:, None], new_c, c)
    return c


@lru_cache(maxsize=128)
def _mean_matrix(n: int, max_size: int) -> np.ndarray:
    """Rows averaging every subset of range(n) of size 1..max_size, in size
    order then lexicographic order. Only built for full-powerset scales."""
    rows = []
    for size in range(1, max_size + 1):
        for combo in itertools.combinations(range(n), size):
            row = np.zeros(n)
            row[list(combo)] = 1.0 / size
            rows.append(row)
    return np.array(rows)


def _random_subsets(rng: np.random.Generator, n: int, size: int, count: int) -> np.ndarray:
    """(count, size) index rows, each a uniform size-subset of range(n)."""
    keys = rng.random((count, n))
    return np.sort(np.argsort(keys, axis=1)[:, :size], axis=1)


def _sample_median_batch(S: np.ndarray, delta: float, z: int) -> np.ndarray:
    """Vectorized pool construction and selection for a batch (b, m, d) of
    equally sized samples whose subset powerset fits in memory."""
    b, m, d = S.shape
    max_size = min(m, math.ceil(1.0 / delta))
    M = _mean_matrix(m, max_size)
    means = np.einsum("sm,bmd->bsd", M, S)
    refined = _weiszfeld_batch(S) if z == 1 else S.mean(axis=1)
    pool = np.concatenate([means, refined[:, None, :]], axis=1)
    D = np.linalg.norm(pool[:, :, None, :] - S[:, None, :, :], axis=3)
    if z == 2:
        D = D * D
    totals = D.sum(axis=2)
    picks = totals.argmin(axis=1)
    return pool[np.arange(b), picks]


def approx_solution_on_sample(
    S,
    delta: float,
    z: int = 1,
    *,
    rng: np.random.Generator | None = None,
    pool_cap: int | None = 20_000,
) -> np.ndarray:
    """Single-center candidate computed from the sample alone.

    The candidate pool holds coordinate-wise means of sample subsets up to
    size ceil(1/delta) (size-1 subsets are the sample points themselves) and
    one refined center: 30 Weiszfeld steps for z=1, the centroid for z=2.
    The pool member with the least radius-zero cost over the sample wins.
    When full enumeration would exceed ``pool_cap`` rows, subsets are drawn
    by seeded sampling instead.
    """
    S = as_points(S, name="sample")
    n = S.shape[0]
    if n == 0:
        raise ValueError("sample must be non-empty")
    if not (0 < delta < 1):
        raise ValueError(f"delta must lie in (0, 1), got {delta!r}")
    if n == 1:
        return S[0].copy()
    cap = math.inf if pool_cap is None else pool_cap

    max_size = min(n, math.ceil(1.0 / delta))
    full_rows = sum(math.comb(n, s) for s in range(1, max_size + 1))
    if n <= 14 and full_rows <= cap:
        return _sample_median_batch(S[None, :, :], delta, z)[0]

    if rng is None:
        rng = np.random.default_rng(0)
    pool = [S]
    remaining = cap - n
    for size in range(2, max_size + 1):
        if remaining <= 0:
            break
        total = math.comb(n, size)
        if total <= remaining:
            idx = np.array(list(itertools.combinations(range(n), size)), dtype=np.int64)
        else:
            idx = _random_subsets(rng, n, size, int(remaining))
        pool.append(S[idx].mean(axis=1))
        remaining -= idx.shape[0]
    pool.append((_weiszfeld_batch(S[None])[0] if z == 1 else S.mean(axis=0)).reshape(1, -1))

    cands = np.vstack(pool)
    D = np.linalg.norm(cands[:, None, :] - S[None, :, :], axis=2)
    if z == 2:
        D = D * D
    totals = D.sum(axis=1)
    return cands[int(np.argmin(totals))].copy()


def _practical_grid(center: np.ndarray, lam: float, tau: float, r: float, cfg: AlgoConfig) -> np.ndarray:
    """Grid call with practical-mode caps on radius and cell count."""
    if cfg.mode == "theory":
        return grid_points(center, lam, tau)
    d = center.shape[0]
    lam_p = min(lam, cfg.grid_radius_cap * r) if r > 0 else lam
    per_dim = max(2.0, cfg.grid_cap ** (1.0 / d))
    tau_p = max(tau, 2.0 * lam_p * np.sqrt(d) / per_dim)
    tau_p = min(tau_p, lam_p)
    return grid_points(center, lam_p, tau_p)


def _theory_guard(n: int, d: int, k: int, cfg: AlgoConfig) -> tuple[int, int]:
    """Theory-sized beta and beta_prime; refuses when one level's work explodes."""
    delta = cfg.resolved_delta(k)
    beta = math.ceil((1.0 / delta) ** 2)
    beta_prime = math.ceil(beta * 150 * k / delta**3)
    grid_cells = (2 * 16 * math.sqrt(d) / delta + 1) ** d
    sample_cells = (2 * 8 * math.sqrt(d) / delta**2 + 1) ** d
    subsets = math.comb(beta_prime, min(beta, beta_prime)) if beta_prime < 10_000 else math.inf
    level_work = k * grid_cells + min(beta_prime, n) * sample_cells + subsets
    if level_work > cfg.theory_budget:
        raise BudgetExceededError(
            f"theory mode needs about {level_work:.3g} candidate evaluations per level "
            f"(beta={beta}, beta_prime={beta_prime}), above the budget of {cfg.theory_budget}"
        )
    return beta, beta_prime


def _q_ladder(r: float, d_max: float, d_min_nz: float, cap: int) -> list[float]:
    """Powers of two in [8r, d_max]; for r=0 the floor falls back to half the
    smallest nonzero distance. Keeps at most ``cap`` of the largest levels."""
    if d_max <= 0:
        return []
    qlo = 8.0 * r if r > 0 else max(d_min_nz / 2.0, d_max * 2.0 ** -(cap + 1))
    if qlo <= 0 or qlo > d_max:
        return []
    j_lo = math.ceil(math.log2(qlo) - 1e-12)
    j_hi = math.floor(math.log2(d_max) + 1e-12)
    if j_lo > j_hi:
        return []
    levels = [2.0**j for j in range(j_lo, j_hi + 1)]
    return levels[-cap:]


def build_candidate_set(
    state: SearchState,
    P,
    r: float,
    cfg: AlgoConfig,
    *,
    k: int,
    z: int = 1,
) -> PointSet:
    """Candidate centers for one recursion level.

    Near grids around every chosen center, then for each exponential-search
    level a uniform sample of the faraway points, grids around the sampled
    points, and one sample-median candidate per enumerated core subset. At
    r=0 the grids degenerate and the sample points themselves stand in. The
    result is deduplicated, stripped of already-chosen centers, and truncated
    to ``branch_cap`` by seeded sampling when oversized. Levels whose faraway
    set repeats the previous level's contribute nothing new and are skipped.
    """
    P = as_points(P)
    if state.remaining < 1:
        raise ValueError("build_candidate_set needs remaining budget >= 1")
    n, d = P.shape
    rng = state.rng
    delta = cfg.resolved_delta(k)
    chosen = np.asarray(state.chosen, dtype=float).reshape(-1, d)

    theory = cfg.mode == "theory"
    if theory:
        beta, beta_prime_cfg = _theory_guard(n, d, k, cfg)
    else:
        beta = cfg.beta
        beta_prime_cfg = cfg.beta_prime if cfg.beta_prime is not None else 30 * k * cfg.beta

    pieces: list[np.ndarray] = []
    if r > 0:
        for c in chosen:
            pieces.append(_practical_grid(c, 16.0 * r, delta * r, r, cfg))

    if chosen.shape[0] == 0:
        qs: list[float | None] = [None]
        dmin_chosen = None
    else:
        d_max = max_pairwise_distance(P)
        qs = _q_ladder(r, d_max, min_nonzero_distance(P), cfg.q_level_cap)
        dmin_chosen = nearest_center_distances(P, chosen)[1] if qs else None

    gridded: set[bytes] = set()
    prev_mask: bytes | None = None
    for q in qs:
        if q is None:
            P_q = P
        else:
            mask = dmin_chosen > q
            key = mask.tobytes()
            if key == prev_mask:
                continue
            prev_mask = key
            P_q = P[mask]
        if P_q.shape[0] == 0:
            continue
        take = min(P_q.shape[0], beta_prime_cfg)
        sel = np.sort(rng.choice(P_q.shape[0], size=take, replace=False))
        S_q = P_q[sel]
        if r > 0:
            for p in S_q:
                pk = p.tobytes()
                if pk not in gridded:
                    gridded.add(pk)
                    pieces.append(_practical_grid(p, 8.0 * r / delta, delta * r, r, cfg))
        else:
            pieces.append(S_q)
        b = min(beta, S_q.shape[0])
        total = math.comb(S_q.shape[0], b)
        if total <= cfg.subset_cap or theory:
            combos = np.array(list(itertools.combinations(range(S_q.shape[0]), b)), dtype=np.int64)
        else:
            combos = _random_subsets(rng, S_q.shape[0], b, cfg.subset_cap)
        dsub = delta / 8.0
        full_rows = sum(math.comb(b, s) for s in range(1, min(b, math.ceil(1.0 / dsub)) + 1))
        pool_cap = math.inf if theory or cfg.median_pool_cap is None else cfg.median_pool_cap
        if b <= 14 and full_rows <= pool_cap:
            pieces.append(_sample_median_batch(S_q[combos], dsub, z))
        else:
            for row in combos:
                pieces.append(
                    approx_solution_on_sample(
                        S_q[row], dsub, z, rng=rng,
                        pool_cap=None if pool_cap is math.inf else int(pool_cap),
                    ).reshape(1, -1)
                )

    if not pieces:
        return np.empty((0, d))
    R = np.unique(np.vstack(pieces), axis=0)
    if chosen.shape[0]:
        member = (R[:, None, :] == chosen[None, :, :]).all(axis=2).any(axis=1)
        R = R[~member]
    if not theory and R.shape[0] > cfg.branch_cap:
        keep = np.sort(rng.choice(R.shape[0], size=cfg.branch_cap, replace=False))
        R = R[keep]
    return R


def _lex_key(centers: np.ndarray) -> tuple:
    return tuple(map(tuple, np.asarray(centers).tolist()))


def _better(cost_a: float, centers_a, cost_b: float, centers_b) -> bool:
    """Strict ordering on (cost, lexicographic centers); associative-safe."""
    if cost_a != cost_b:
        return cost_a < cost_b
    if centers_b is None:
        return True
    if centers_a is None:
        return False
    return _lex_key(centers_a) < _lex_key(centers_b)


def hybrid_clustering(
    state: SearchState,
    P,
    k: int,
    r: float,
    cfg: AlgoConfig,
    *,
    z: int = 1,
) -> Solution:
    """Recursive search for at most k centers.

    Each level branches on every candidate plus a no-addition branch, and the
    minimum is selected at the working radius (1 + delta/3) * r. An all-empty
    leaf scores infinite cost so it never wins while any real candidate
    exists. The bottom level is evaluated in one vectorized sweep, which
    changes nothing except speed: candidates are already in lexicographic
    order, so the first minimum is also the lexicographically smallest.
    """
    P = as_points(P)
    if len(state.chosen) + state.remaining > k:
        raise ValueError("chosen centers plus remaining budget exceed k")
    delta_prime = cfg.resolved_delta_prime(k)
    r_sel = (1.0 + delta_prime) * r
    d = P.shape[1]

    def leaf_cost(chosen: np.ndarray) -> float:
        return _threshold_cost(P, chosen, r_sel, z) if chosen.shape[0] else np.inf

    def recurse(chosen: np.ndarray, m: int, rng: np.random.Generator):
        if m == 0:
            return leaf_cost(chosen), chosen
        build_rng, spawn_rng = rng.spawn(2)
        R = build_candidate_set(SearchState(chosen, m, build_rng), P, r, cfg, k=k, z=z)
        if m == 1:
            base_cost = leaf_cost(chosen)
            if R.shape[0] == 0:
                return base_cost, chosen
            D = np.linalg.norm(P[:, None, :] - R[None, :, :], axis=2)
            if chosen.shape[0]:
                dbase = np.linalg.norm(P[:, None, :] - chosen[None, :, :], axis=2).min(axis=1)
                D = np.minimum(D, dbase[:, None])
            v = np.maximum(D - r_sel, 0.0)
            if z == 2:
                v = v * v
            costs = v.sum(axis=0)
            i = int(np.argmin(costs))
            # The no-addition branch is a lexicographic prefix, so it wins ties.
            if base_cost <= costs[i]:
                return base_cost, chosen
            return float(costs[i]), np.vstack([chosen, R[i][None, :]])
        best_cost, best_centers = np.inf, None
        child_rngs = spawn_rng.spawn(R.shape[0] + 1)
        for c, crng in zip(R, child_rngs[:-1]):
            cc, cf = recurse(np.vstack([chosen, c[None, :]]), m - 1, crng)
            if _better(cc, cf, best_cost, best_centers):
                best_cost, best_centers = cc, cf
        cc, cf = recurse(chosen, m - 1, child_rngs[-1])
        if _better(cc, cf, best_cost, best_centers):
            best_cost, best_centers = cc, cf
        if best_centers is None:
            best_centers = chosen if chosen.shape[0] else np.empty((0, d))
        return best_cost, best_centers

    chosen0 = np.asarray(state.chosen, dtype=float).reshape(-1, d)
    final_cost, final_centers = recurse(chosen0, state.remaining, state.rng)
    return Solution(final_centers, 1.0 + delta_prime, float(final_cost))


def _run_hybrid(P, k: int, r: float, z: int, cfg: AlgoConfig, key: tuple) -> np.ndarray:
    """One seeded search run; the spawn key isolates its random stream."""
    P = as_points(P)
    rng = np.random.default_rng(np.random.SeedSequence(entropy=cfg.seed, spawn_key=key))
    state = SearchState(chosen=np.empty((0, P.shape[1])), remaining=k, rng=rng)
    return hybrid_clustering(state, P, k, r, cfg, z=z).centers


def full_pipeline(instance: Instance, cfg: AlgoConfig) -> Solution:
    """Run every applicable route, rescore all candidates on the original
    points at radius (1 + eps) * r, and return the cheapest.

    Routes per restart: the search on the original points, the radius-zero
    reduction rescored at r, and for every in-regime optimum guess the search
    on the discretized points, split across connected components with budgets
    combined by the allocation DP. Coverage-regime candidates are
    deterministic and computed once. Guesses whose component split is
    infeasible are skipped.
    """
    P, k, r, z = instance.points, instance.k, instance.r, instance.z
    n = P.shape[0]
    eps = cfg.eps
    eval_radius = (1.0 + eps) * r

    collected: list[tuple[str, np.ndarray]] = []

    def consider(centers, label: str = "pipeline") -> None:
        arr = np.asarray(centers, dtype=float)
        if arr.size:
            collected.append((label, arr.reshape(-1, P.shape[1])))

    if r > 0:
        try:
            center_like = preprocess.solve_center_like(
                P, k, r, eps, z=z, enum_budget=cfg.center_enum_budget
            )
            if center_like is not None:
                consider(center_like.centers, "center_like")
        except BudgetExceededError:
            pass

    ladder = preprocess.opt_guess_ladder(P, k, r, eps)
    in_regime = [
        g for g in ladder if g.value > 0 and eps * g.value / (2 * n) <= r <= g.value
    ]
    if cfg.guess_cap is not None and len(in_regime) > cfg.guess_cap:
        pick = np.unique(np.linspace(0, len(in_regime) - 1, cfg.guess_cap).round().astype(int))
        in_regime = [in_regime[i] for i in pick]

    for rep in range(cfg.repetitions):
        consider(_run_hybrid(P, k, r, z, cfg, key=(rep, 0)))
        if r > 0:
            km = preprocess.reduce_to_kmedian(
                P, k, r, eps,
                lambda Q, kk: _run_hybrid(Q, kk, 0.0, z, cfg, key=(rep, 1)),
                z=z,
            )
            consider(km.centers, "kmedian_reduce")
        for gi, guess in enumerate(in_regime):
            decomp = preprocess.discretize(P, k, r, eps, guess.value)
            comps = decomp.components
            if len(comps) == 1:
                consider(_run_hybrid(decomp.snapped, k, r, z, cfg, key=(rep, 2 + gi)))
                continue
            if len(comps) > k:
                continue
            tables = []
            centers_by_comp: list[dict[int, np.ndarray]] = []
            r_sel = (1.0 + cfg.resolved_delta_prime(k)) * r
            for ci, comp in enumerate(comps):
                row = [np.inf]
                found: dict[int, np.ndarray] = {}
                # Budgets beyond the component size cannot improve its cost.
                b_hi = min(k, comp.shape[0])
                for b in range(1, b_hi + 1):
                    centers_b = _run_hybrid(comp, b, r, z, cfg, key=(rep, 2 + gi, ci, b))
                    if centers_b.size:
                        row.append(_threshold_cost(comp, centers_b, r_sel, z))
                        found[b] = centers_b
                    else:
                        row.append(np.inf)
                for b in range(b_hi + 1, k + 1):
                    row.append(row[b_hi])
                    if b_hi in found:
                        found[b] = found[b_hi]
                tables.append(row)
                centers_by_comp.append(found)
            try:
                alloc = preprocess.combine_components(tables, k)
            except InfeasibleError:
                continue
            union = [
                centers_by_comp[ci][b]
                for ci, b in enumerate(alloc)
                if b >= 1 and b in centers_by_comp[ci]
            ]
            if len(union) == len(comps):
                consider(np.vstack(union))

    best_cost, best_centers, best_label = np.inf, None, "pipeline"
    for label, centers in collected:
        c = _threshold_cost(P, centers, eval_radius, z)
        if _better(c, centers, best_cost, best_centers):
            best_cost, best_centers, best_label = c, centers, label
    if best_centers is None:
        raise InfeasibleError("no candidate solutions were generated")
    return Solution(best_centers, 1.0 + eps, float(best_cost), source=best_label)
