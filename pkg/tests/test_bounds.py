import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import norm

from erasure_retrieval.bounds import (QMCConfig, bonferroni_first, bonferroni_third, full_report, pe_mvn,
                                      sidak_bound)
from erasure_retrieval.margins import MarginMoments

from conftest import random_psd

ONE = MarginMoments(np.array([0.06]), np.array([[0.03]]))
IND2 = MarginMoments(np.zeros(2), np.eye(2))
IND3 = MarginMoments(np.zeros(3), np.eye(3))


def exact_union_by_enumeration(mu, sd):
    """Union probability of independent events P(E_j) = Phi(-mu_j/sd_j)."""
    return 1 - np.prod(norm.cdf(mu / sd))


class TestPeMvn:
    def test_single_competitor(self):
        assert pe_mvn(ONE).value == pytest.approx(norm.cdf(-0.06 / math.sqrt(0.03)), abs=1e-12)
        assert pe_mvn(ONE).value == pytest.approx(0.3645, abs=5e-5)

    def test_deterministic_correct(self):
        assert pe_mvn(MarginMoments(np.array([0.1, 0.3]), np.zeros((2, 2)))).value == 0.0

    def test_deterministic_error(self):
        assert pe_mvn(MarginMoments(np.array([0.1, -0.3]), np.zeros((2, 2)))).value == 1.0

    def test_independent_union(self):
        assert pe_mvn(IND3).value == pytest.approx(0.875, abs=1e-12)


class TestBonferroni:
    def test_first_order_values(self):
        assert bonferroni_first(MarginMoments(np.zeros(1), np.eye(1))) == 0.5
        assert bonferroni_first(IND2) == 1.0
        assert bonferroni_first(ONE) == pytest.approx(pe_mvn(ONE).value, abs=1e-15)

    def test_third_order_single(self):
        assert bonferroni_third(ONE) == bonferroni_first(ONE)

    @pytest.mark.parametrize("m, exact", [(2, 0.75), (3, 0.875)])
    def test_third_order_exact_at_small_m(self, m, exact):
        assert abs(bonferroni_third(MarginMoments(np.zeros(m), np.eye(m))) - exact) <= 1e-4

    @given(st.integers(0, 10 ** 6))
    def test_third_order_exact_for_three_correlated(self, seed):
        rng = np.random.default_rng(seed)
        S = random_psd(rng, 3)
        mu = rng.standard_normal(3) * np.sqrt(np.diag(S))
        mom = MarginMoments(mu, S)
        assert bonferroni_third(mom) == pytest.approx(pe_mvn(mom).value, abs=1e-9)

    def test_certain_events_enter_combinatorially(self):
        # two certain events and one independent fair event: union is 1
        mom = MarginMoments(np.array([-1.0, -2.0, 0.0]), np.diag([0.0, 0.0, 1.0]))
        # B1 = 2.5, B2 = 1 + 2 * 0.5 = 2, B3 = 0.5
        assert bonferroni_first(mom) == 2.5
        assert bonferroni_third(mom) == pytest.approx(1.0)

    def test_impossible_events_drop_out(self):
        mom = MarginMoments(np.array([5.0, 0.0, 0.0]), np.diag([0.0, 1.0, 1.0]))
        assert bonferroni_third(mom) == pytest.approx(0.75)

    def test_operation_counts(self):
        rng = np.random.default_rng(0)
        for m in (4, 9, 15):
            S = random_psd(rng, m)
            mom = MarginMoments(np.zeros(m), S)
            c1, c3, cs = Counter(), Counter(), Counter()
            bonferroni_first(mom, c1)
            sidak_bound(mom, cs)
            bonferroni_third(mom, c3)
            assert c1 == Counter(univariate=m)
            assert cs == Counter(univariate=m)
            assert c3["enumerated_2"] == math.comb(m, 2)
            assert c3["enumerated_3"] == math.comb(m, 3)
            assert c3["trivariate"] <= math.comb(m, 3)


class TestSidak:
    def test_single(self):
        assert sidak_bound(ONE).value == pytest.approx(bonferroni_first(ONE), abs=1e-15)

    def test_independent_exact(self):
        r = sidak_bound(IND2)
        assert r.value == pytest.approx(0.75) and r.valid

    def test_ten_far_competitors(self):
        mom = MarginMoments(np.full(10, 3.0), np.eye(10))
        assert sidak_bound(mom).value == pytest.approx(1 - norm.cdf(3.0) ** 10, rel=1e-12)
        assert sidak_bound(mom).value == pytest.approx(0.0134, abs=1e-4)

    def test_validity_flag(self):
        neg = MarginMoments(np.zeros(2), np.array([[1.0, -0.5], [-0.5, 1.0]]))
        assert not sidak_bound(neg).valid


class TestFullReport:
    def test_single_competitor_all_equal(self):
        rep = full_report(ONE)
        vals = [rep.pe_mvn, rep.b1, rep.b3, rep.sidak]
        assert max(vals) - min(vals) <= 1e-6

    def test_independent_pair(self):
        rep = full_report(IND2)
        assert (rep.pe_mvn, rep.b1, rep.b3, rep.sidak) == pytest.approx((0.75, 1.0, 0.75, 0.75), abs=1e-12)

    def test_all_certain_correct(self):
        rep = full_report(MarginMoments(np.array([0.2, 0.4]), np.zeros((2, 2))))
        assert (rep.pe_mvn, rep.b1, rep.b3, rep.sidak) == (0.0, 0.0, 0.0, 0.0)
        assert rep.degenerate == (0, 1)

    def test_combined_and_serialization(self):
        rep = full_report(MarginMoments(np.array([-0.2, 0.1, 0.0, 0.3]), np.eye(4) + 0.2))
        assert rep.combined == min(rep.b1_clipped, max(rep.b3, 0.0))
        assert rep.to_json()["combined"] == rep.combined
        assert set(rep.to_row()) >= {"pe_mvn", "b1", "b1_clipped", "b3", "sidak", "sidak_valid", "combined"}

    def test_bounds_dominate_gaussian_error(self):
        rng = np.random.default_rng(17)
        for _ in range(25):
            m = int(rng.integers(1, 12))
            S = random_psd(rng, m, k=int(rng.integers(1, m + 3)))
            mu = rng.normal(0.8, 1.0, m) * np.sqrt(np.diag(S))
            rep = full_report(MarginMoments(mu, S), QMCConfig(seed=(3,)))
            slack = 3 * rep.pe_mvn_se + 1e-12
            assert rep.pe_mvn <= rep.b1 + slack
            assert rep.pe_mvn <= rep.b3 + slack
            if rep.sidak_valid:
                assert rep.pe_mvn <= rep.sidak + slack
