import math
from itertools import product

import numpy as np
import pytest
from hypothesis import given, strategies as st

from erasure_retrieval.coding import (UndefinedRateError, allocation_objective, budget_from_rate, compositions,
                                      dp_budget_allocation, effective_rate, exhaustive_allocation,
                                      proportional_plan, survival_probabilities)
from erasure_retrieval.corpus import ZipfVocabulary, build_query, sample_counts

scores_st = st.lists(st.floats(0, 10, allow_nan=False), min_size=1, max_size=6)


class TestProportionalPlan:
    def test_rate_one(self):
        plan = proportional_plan(np.array([0.4, 0.2, 0.0]), 3, 1.0, 0.5)
        assert plan.r.tolist() == [2, 1, 0] and plan.total == 3

    def test_rate_half(self):
        plan = proportional_plan(np.array([0.4, 0.2, 0.0]), 3, 0.5, 0.5)
        assert plan.r.tolist() == [4, 2, 0] and plan.total == 6

    def test_survival_attached(self):
        plan = proportional_plan(np.array([0.4, 0.2, 0.0]), 3, 1.0, 0.5)
        assert np.allclose(plan.p, [0.75, 0.5, 0.0])

    @pytest.mark.parametrize("R", [0.0, -1.0])
    def test_rejects_nonpositive_rate(self, R):
        with pytest.raises(ValueError):
            proportional_plan(np.array([1.0]), 1, R, 0.5)

    @given(st.lists(st.integers(0, 20), min_size=1, max_size=30), st.floats(0.05, 1.0))
    def test_active_coordinates_get_a_copy_when_rate_at_most_one(self, counts, R):
        counts = np.array(counts)
        if counts.sum() == 0:
            return
        q = build_query(counts, int(counts.sum()))
        plan = proportional_plan(q.v, q.M, R, 0.3)
        assert np.all(plan.r[q.support] >= 1)
        assert np.all(plan.r[counts == 0] == 0)
        assert plan.rate <= R * (1 + 1e-12)

    def test_rate_bound_on_sampled_queries(self):
        vocab = ZipfVocabulary.create(5000, 1.0, l_s=3)
        rng = np.random.default_rng(2)
        for q in range(300):
            L = int(rng.integers(5, 200))
            counts = sample_counts(vocab, L, (1, q))
            if counts[3:].sum() == 0:
                continue
            query = build_query(counts, L, vocab.stopwords)
            R = float(rng.uniform(0.1, 2.0))
            assert effective_rate(proportional_plan(query.v, query.M, R, 0.5).r, query.M) <= R


class TestSurvival:
    @pytest.mark.parametrize("r, eps, expected", [(0, 0.3, 0.0), (3, 0.0, 1.0), (2, 0.5, 0.75), (0, 0.0, 0.0)])
    def test_values(self, r, eps, expected):
        assert survival_probabilities(np.array([r]), eps)[0] == expected

    def test_rejects_bad_epsilon(self):
        with pytest.raises(ValueError):
            survival_probabilities(np.array([1]), 1.5)


class TestEffectiveRate:
    @pytest.mark.parametrize("r, M, expected", [([2, 1, 0], 3, 1.0), ([4, 2, 0], 3, 0.5), ([1], 1, 1.0)])
    def test_values(self, r, M, expected):
        assert effective_rate(np.array(r), M) == expected

    def test_undefined_without_repetitions(self):
        with pytest.raises(UndefinedRateError):
            effective_rate(np.array([0, 0]), 2)


class TestBudget:
    @pytest.mark.parametrize("L, R, B", [(100, 1.0, 100), (100, 0.5, 200), (5, 2.0, 2), (7, 2.0, 4)])
    def test_round_half_even(self, L, R, B):
        assert budget_from_rate(L, R) == B


class TestDPAllocation:
    def test_worked_example(self):
        a = dp_budget_allocation(np.array([0.9, 0.1]), 3, 0.5)
        assert a.r.tolist() == [3, 0]
        assert math.isclose(a.objective, 0.7875, abs_tol=1e-15)

    def test_worked_example_by_enumeration(self):
        # the four splits of 3 between two tokens
        vals = {r: 0.9 * (1 - 0.5 ** r) + 0.1 * (1 - 0.5 ** (3 - r)) for r in range(4)}
        assert max(vals, key=vals.get) == 3 and math.isclose(vals[3], 0.7875)

    def test_zero_budget(self):
        a = dp_budget_allocation(np.array([0.3, 0.5, 0.2]), 0, 0.4)
        assert a.r.tolist() == [0, 0, 0] and a.objective == 0.0

    def test_single_token(self):
        assert dp_budget_allocation(np.array([0.7]), 5, 0.2).r.tolist() == [5]

    def test_ties_prefer_lexicographically_smallest(self):
        a = dp_budget_allocation(np.array([1.0, 1.0]), 1, 0.5)
        assert a.r.tolist() == [0, 1]

    @given(scores_st, st.integers(0, 8), st.sampled_from([0.0, 0.1, 0.5, 0.9, 1.0]))
    def test_matches_exhaustive_search(self, scores, B, eps):
        s = np.array(scores)
        dp = dp_budget_allocation(s, B, eps)
        ex = exhaustive_allocation(s, B, eps)
        assert dp.objective == ex.objective
        assert int(dp.r.sum()) == B
        assert allocation_objective(s, dp.r, eps) == dp.objective

    @given(scores_st, st.sampled_from([0.1, 0.5, 0.9]))
    def test_objective_nondecreasing_in_budget(self, scores, eps):
        s = np.array(scores)
        vals = [dp_budget_allocation(s, B, eps).objective for B in range(10)]
        assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))

    @pytest.mark.parametrize("scores, B, eps", [([-1.0], 1, 0.5), ([1.0], -1, 0.5), ([1.0], 1, 2.0),
                                                ([[1.0]], 1, 0.5)])
    def test_rejects_bad_inputs(self, scores, B, eps):
        with pytest.raises(ValueError):
            dp_budget_allocation(np.array(scores), B, eps)


class TestCompositions:
    @pytest.mark.parametrize("total, parts", [(0, 1), (3, 2), (5, 3), (8, 6)])
    def test_count_and_order(self, total, parts):
        got = list(compositions(total, parts))
        assert len(got) == math.comb(total + parts - 1, parts - 1)
        assert got == sorted(got)
        brute = sorted(c for c in product(range(total + 1), repeat=parts) if sum(c) == total)
        assert got == brute
