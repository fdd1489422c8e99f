import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hybridk.errors import InfeasibleError, RegimeError
from hybridk.geometry import cost
from hybridk.oracle import brute_force_continuous, one_median_exact
from hybridk.preprocess import (
    combine_components,
    discretize,
    gonzalez_kcenter,
    opt_guess_ladder,
    reduce_to_kmedian,
    solve_center_like,
)


class TestOptGuessLadder:
    def test_two_point_example(self):
        ladder = opt_guess_ladder([0.0, 1.0], 1, 0.0, 0.5)
        assert [g.value for g in ladder] == [0.125, 0.25, 0.5, 1.0, 2.0]
        assert [g.index for g in ladder] == [0, 1, 2, 3, 4]

    def test_all_coincident(self):
        ladder = opt_guess_ladder([2.0, 2.0, 2.0], 1, 0.0, 0.5)
        assert len(ladder) == 1 and ladder[0].value == 0.0

    def test_spans_declared_range(self):
        rng = np.random.default_rng(0)
        P = rng.uniform(0, 10, size=(9, 2))
        eps = 0.5
        ladder = opt_guess_ladder(P, 2, 0.3, eps)
        dmin = min(
            np.linalg.norm(a - b) for a, b in itertools.combinations(P, 2)
        )
        dmax = max(
            np.linalg.norm(a - b) for a, b in itertools.combinations(P, 2)
        )
        assert ladder[0].value == pytest.approx(eps * dmin / (2 * len(P)))
        assert ladder[-1].value >= len(P) * dmax
        ratios = [b.value / a.value for a, b in zip(ladder, ladder[1:])]
        assert all(r == 2.0 for r in ratios)

    def test_length_bound_on_bounded_aspect_inputs(self):
        # Length stays within ceil(log2(4 n^2 / eps)) + 1 when the aspect
        # ratio is at most 2 (square corners, hexagon vertices, pairs).
        eps = 0.5
        square = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]
        hexagon = [
            [math.cos(t * math.pi / 3), math.sin(t * math.pi / 3)] for t in range(6)
        ]
        for P in ([0.0, 1.0], square, hexagon):
            ladder = opt_guess_ladder(P, 1, 0.0, eps)
            n = len(P)
            assert len(ladder) <= math.ceil(math.log2(4 * n * n / eps)) + 1


class TestGonzalez:
    def test_line_three_points(self):
        centers, radius = gonzalez_kcenter([0.0, 1.0, 10.0], 2)
        assert sorted(centers.ravel().tolist()) == [0.0, 10.0]
        assert radius == 1.0

    def test_enough_centers_for_distinct_points(self):
        centers, radius = gonzalez_kcenter([3.0, 3.0, 7.0], 5)
        assert radius == 0.0

    def test_four_point_trace(self):
        centers, radius = gonzalez_kcenter([0.0, 4.0, 5.0, 9.0], 2)
        assert sorted(centers.ravel().tolist()) == [0.0, 9.0]
        assert radius == 4.0

    @given(st.integers(0, 2**32 - 1), st.sampled_from([1, 2, 3]))
    def test_prop_two_approximation(self, seed, k):
        rng = np.random.default_rng(seed)
        P = rng.uniform(0, 10, size=(rng.integers(4, 12), 2))
        _, radius = gonzalez_kcenter(P, k)
        # Brute-force optimal k-center radius over center subsets of P; the
        # continuous optimum is at least half the discrete one, and the
        # traversal guarantee is against the continuous optimum.
        D = np.linalg.norm(P[:, None, :] - P[None, :, :], axis=2)
        best = min(
            D[:, list(combo)].min(axis=1).max()
            for combo in itertools.combinations(range(len(P)), min(k, len(P)))
        )
        assert radius <= 2 * best + 1e-9


class TestSolveCenterLike:
    def test_separated_singletons_cost_zero(self):
        P = [[0.0, 0.0], [20.0, 0.0], [0.0, 20.0]]
        sol = solve_center_like(P, 3, 1.0, 0.5)
        assert sol is not None
        assert sol.cost == 0.0
        assert sol.radius_factor == 1.5

    def test_two_tight_clusters(self):
        rng = np.random.default_rng(1)
        P = np.vstack(
            [rng.normal((0, 0), 0.1, (5, 2)), rng.normal((100, 0), 0.1, (5, 2))]
        )
        sol = solve_center_like(P, 2, 1.0, 0.5)
        assert sol is not None
        assert sol.cost == 0.0

    def test_not_applicable_when_spread(self):
        P = [0.0, 10.0, 20.0, 30.0]
        assert solve_center_like(P, 1, 0.1, 0.5) is None

    def test_requires_positive_radius(self):
        with pytest.raises(ValueError):
            solve_center_like([[0.0, 0.0]], 1, 0.0, 0.5)


class TestReduceToKMedian:
    def test_zero_radius_is_identity(self):
        P = np.array([[0.0], [1.0], [7.0]])
        fixed = np.array([[1.0]])
        sol = reduce_to_kmedian(P, 1, 0.0, 0.5, lambda Q, k: fixed)
        assert sol.radius_factor == 1.0
        assert sol.cost == cost(P, fixed, 0.0)

    def test_line_with_small_radius(self):
        # Continuous single-center optimum sits at the middle point, so the
        # rescored cost is 7 minus 0.01 for each of the two uncovered points.
        P = [0.0, 1.0, 7.0]
        sol = reduce_to_kmedian(
            P, 1, 0.01, 0.5, lambda Q, k: [one_median_exact(Q, 0.002)[0]]
        )
        assert 6.9 <= sol.cost <= 7.0

    def test_colocated_points(self):
        P = [[2.0, 2.0]] * 5
        sol = reduce_to_kmedian(P, 1, 0.3, 0.5, lambda Q, k: Q[:1])
        assert sol.cost == 0.0


class TestDiscretize:
    def test_far_pair_splits(self):
        decomp = discretize([0.0, 1e6], 1, 0.5, 0.5, 1.0)
        assert len(decomp.components) == 2

    def test_chain_stays_connected(self):
        decomp = discretize([0.0, 1.0, 2.0, 3.0], 1, 0.5, 0.5, 1.0)
        assert len(decomp.components) == 1

    def test_snap_cell_and_cell_centers(self):
        P = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 0.5]])
        eps, guess = 0.5, 2.0
        decomp = discretize(P, 1, 1.0, eps, guess)
        n, d = P.shape
        assert decomp.snap_cell == pytest.approx(eps * guess / (math.sqrt(d) * n))
        offsets = decomp.snapped / decomp.snap_cell - 0.5
        assert np.allclose(offsets, np.round(offsets))

    def test_regime_violation_raises(self):
        with pytest.raises(RegimeError):
            discretize([0.0, 1.0], 1, 5.0, 0.5, 1.0)  # r above the guess
        with pytest.raises(RegimeError):
            discretize([0.0, 1.0], 1, 0.0, 0.5, 1.0)  # r below eps*G/(2n)

    @given(st.integers(0, 2**32 - 1))
    def test_prop_cost_preservation(self, seed):
        rng = np.random.default_rng(seed)
        P = rng.uniform(0, 5, size=(12, 2))
        eps, guess = 0.5, 4.0
        r = 1.0
        decomp = discretize(P, 2, r, eps, guess)
        n, d = P.shape
        bound_slack = math.sqrt(d) * n * decomp.snap_cell
        for _ in range(20):
            F = rng.uniform(0, 5, size=(2, 2))
            before = cost(P, F, r)
            after = cost(decomp.snapped, F, r)
            assert abs(after - before) <= eps * before + bound_slack

    def test_aspect_ratio_bound_on_chain(self):
        P = np.array([0.0, 1.0, 2.0, 3.0, 4.0])
        eps, guess, r = 0.5, 2.0, 1.0
        decomp = discretize(P, 2, r, eps, guess)
        n = len(P)
        for comp in decomp.components:
            dists = [abs(a - b) for a, b in itertools.combinations(comp.ravel(), 2)]
            nz = [v for v in dists if v > 0]
            if nz:
                assert max(nz) / min(nz) <= 4 * n * n / eps


class TestCombineComponents:
    def test_single_component_gets_everything(self):
        assert combine_components([[np.inf, 4.0, 2.0, 1.0]], 3) == [3]

    def test_two_components_forced_split(self):
        tables = [[np.inf, 5.0, 1.0], [np.inf, 7.0, 2.0]]
        assert combine_components(tables, 2) == [1, 1]

    def test_zero_row_absorbs_minimum_budget(self):
        tables = [[np.inf, 0.0, 0.0, 0.0], [np.inf, 5.0, 2.0, 1.0]]
        assert combine_components(tables, 3) == [1, 2]

    def test_infeasible_when_components_exceed_budget(self):
        tables = [[np.inf, 3.0], [np.inf, 4.0]]
        with pytest.raises(InfeasibleError):
            combine_components(tables, 1)

    @given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.integers(1, 5))
    def test_prop_matches_exhaustive_enumeration(self, seed, ncomp, k):
        rng = np.random.default_rng(seed)
        tables = []
        for _ in range(ncomp):
            row = [np.inf] + sorted(rng.uniform(0, 10, size=k).tolist(), reverse=True)
            tables.append(row)
        try:
            alloc = combine_components(tables, k)
        except InfeasibleError:
            assert ncomp > k
            return
        got = sum(tables[c][b] for c, b in enumerate(alloc))
        best = min(
            (
                sum(tables[c][bs[c]] for c in range(ncomp))
                for bs in itertools.product(range(k + 1), repeat=ncomp)
                if sum(bs) <= k
            ),
        )
        assert got == pytest.approx(best)
        assert sum(alloc) <= k


class TestMedianRegimeInequality:
    @given(st.integers(0, 2**31 - 1))
    def test_prop_small_radius_preserves_optimum(self, seed):
        # When the optimum dominates 2nr/eps, the radius-zero optimum is
        # within a (1 + eps/2) factor, checked with certified oracle bounds.
        rng = np.random.default_rng(seed)
        n = int(rng.integers(5, 8))
        P = rng.uniform(0, 3, size=(n, 2))
        eps = 0.5
        k = int(rng.integers(1, 3))
        res0 = brute_force_continuous(P, k, 0.0, 1, 0.02)
        if res0.cost <= 0.1:
            return
        r = 0.4 * eps * res0.cost / (2 * n)
        resr = brute_force_continuous(P, k, r, 1, 0.02, certify_lower=True)
        if resr.lower_bound < 2 * n * r / eps:
            return
        slack = n * 0.02
        assert res0.cost <= (1 + eps / 2) * resr.cost + slack
