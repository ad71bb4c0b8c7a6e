import math
from dataclasses import replace

import numpy as np
import pytest
from scipy.stats import norm

from erasure_retrieval.bounds import full_report
from erasure_retrieval.coding import proportional_plan
from erasure_retrieval.corpus import DocumentCorpus
from erasure_retrieval.harness import (ConfigError, ExperimentConfig, averaged_bounds, cell_rows, estimate_error,
                                       run_trial, sample_query, wilson_interval, CSV_FIELDS)
from erasure_retrieval.margins import margin_coefficients, margin_moments
from erasure_retrieval.bounds import pe_mvn
from erasure_retrieval import rng as rngmod
from erasure_retrieval.retrieval import ground_truth, retrieve

SMALL = dict(N=500, L_doc=2000, n=5, L_q=30, trials=150, Q=4)


@pytest.fixture(scope="module")
def cfg():
    return ExperimentConfig(epsilons=(0.0, 0.3, 0.5, 0.7, 1.0), **SMALL)


@pytest.fixture(scope="module")
def corpus(cfg):
    return cfg.corpus()


class TestConfig:
    @pytest.mark.parametrize("key, value", [("R", 0.0), ("n", 1), ("L_q", 0), ("trials", 0), ("alpha", -1.0),
                                            ("mode", "bogus"), ("l_s", 5000), ("seed", -1)])
    def test_invalid_values_name_the_key(self, key, value):
        with pytest.raises(ConfigError) as info:
            ExperimentConfig(**{key: value})
        assert info.value.key == key

    def test_epsilon_range(self):
        with pytest.raises(ConfigError) as info:
            ExperimentConfig(epsilons=(0.5, 1.2))
        assert info.value.key == "epsilon"


class TestRunTrial:
    def test_endpoints(self, cfg, corpus):
        for t in range(40):
            out = run_trial(cfg, corpus, t, (0.0, 1.0))
            assert out.errors.tolist() == [0, 1]

    def test_deterministic(self, cfg, corpus):
        a = run_trial(cfg, corpus, 7)
        b = run_trial(cfg, corpus, 7)
        assert a.errors.tolist() == b.errors.tolist() and a.decisions == b.decisions

    def test_epsilon_grouping_does_not_change_outcomes(self, cfg, corpus):
        grouped = run_trial(cfg, corpus, 3, (0.3, 0.7))
        alone = [run_trial(cfg, corpus, 3, (e,)).errors[0] for e in (0.3, 0.7)]
        assert grouped.errors.tolist() == alone

    def test_ground_truth_is_untied(self, cfg, corpus):
        for t in range(20):
            sq = sample_query(cfg, corpus, t)
            assert not sq.truth.tie
            assert sq.query.M >= 1

    def test_token_mode_lossless_channel(self):
        c = ExperimentConfig(mode="token-dp", scorer="uniform", epsilons=(0.0,), **SMALL)
        corp = c.corpus()
        assert all(run_trial(c, corp, t).errors[0] == 0 for t in range(15))

    def test_token_mode_total_erasure(self):
        c = ExperimentConfig(mode="token-dp", scorer="semantic", epsilons=(1.0,), **SMALL)
        corp = c.corpus()
        out = run_trial(c, corp, 0)
        assert out.errors[0] == 1 and out.decisions == (-1,)

    def test_token_mode_random_scorer_deterministic(self):
        c = ExperimentConfig(mode="token-dp", scorer="random", epsilons=(0.5,), **SMALL)
        corp = c.corpus()
        assert run_trial(c, corp, 2).decisions == run_trial(c, corp, 2).decisions


class TestEstimateError:
    def test_endpoints_and_intervals(self, cfg, corpus):
        est = {e.epsilon: e for e in estimate_error(cfg, corpus)}
        assert est[0.0].p_hat == 0.0 and est[1.0].p_hat == 1.0
        T = cfg.trials
        z2 = norm.ppf(0.975) ** 2
        # Wilson upper limit at zero errors is z^2 / (T + z^2), slightly above 3/T
        assert est[0.0].ci_high == pytest.approx(z2 / (T + z2), rel=1e-9)
        assert est[0.0].ci_low == 0.0 and est[1.0].ci_high == 1.0

    def test_error_grows_with_erasure(self, cfg, corpus):
        est = estimate_error(cfg, corpus)
        for a, b in zip(est, est[1:]):
            assert b.p_hat >= a.p_hat or b.ci_high >= a.ci_low

    def test_wilson_matches_formula(self):
        k, n, z = 37, 200, norm.ppf(0.975)
        p = k / n
        centre = (p + z * z / (2 * n)) / (1 + z * z / n)
        half = z / (1 + z * z / n) * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n))
        lo, hi = wilson_interval(k, n)
        assert (lo, hi) == pytest.approx((centre - half, centre + half), rel=1e-12)


class TestAveragedBounds:
    def test_single_query_equals_its_report(self, cfg, corpus):
        ab = averaged_bounds(replace(cfg, epsilons=(0.5,)), corpus, Q=1)[0]
        sq = sample_query(cfg, corpus, 0, stream=rngmod.STREAM_BOUNDS)
        q = sq.query
        coeffs = margin_coefficients(q.v, corpus, sq.truth.index, q.support)
        moments = margin_moments(coeffs, proportional_plan(q.v, q.M, cfg.R, 0.5).p[q.support])
        qmc = replace(cfg.qmc, seed=(cfg.seed, rngmod.STREAM_QMC, 0, int(round(0.5 * 1e9))))
        rep = full_report(moments, qmc)
        assert ab.mean["pe_mvn"] == rep.pe_mvn and ab.mean["b3"] == rep.b3 and ab.mean["sidak"] == rep.sidak

    def test_lossless_channel_gives_zero(self, cfg, corpus):
        ab = averaged_bounds(replace(cfg, epsilons=(0.0,)), corpus)[0]
        assert all(v == 0.0 for v in ab.mean.values())

    def test_token_mode_rejected(self, corpus):
        with pytest.raises(ConfigError):
            averaged_bounds(ExperimentConfig(mode="token-dp", **SMALL), corpus)

    def test_conditional_consistency_in_gaussian_regime(self):
        # many comparable coordinates: the margin is a sum of many small independent terms
        rng = np.random.default_rng(3)
        K, n = 400, 6
        tf = np.abs(1 + 0.1 * rng.standard_normal((n, K)))
        tf /= tf.sum(axis=1, keepdims=True)
        corpus = DocumentCorpus(tf=tf, presence=np.full(K, n), idf=np.ones(K), L_doc=1)
        v = np.full(K, 1.0 / K)
        support = np.arange(K)
        k = ground_truth(v, corpus, support).index
        p = np.full(K, 0.7)
        pe = pe_mvn(margin_moments(margin_coefficients(v, corpus, k, support), p))
        T = 4000
        e = rng.random((T, K)) < p
        freq = np.mean([retrieve(v * row, corpus, support).index != k for row in e])
        se = math.sqrt(freq * (1 - freq) / T + pe.std_error ** 2)
        assert abs(freq - pe.value) <= max(0.03, 4 * se)


class TestCellRows:
    def test_schema(self, cfg, corpus):
        rows = cell_rows(replace(cfg, epsilons=(0.0, 1.0)), corpus)
        assert [tuple(r) for r in rows] == [CSV_FIELDS] * 2
        assert rows[0]["pe_mc"] == 0.0 and rows[1]["pe_mc"] == 1.0
        assert rows[1]["pe_mvn"] == 1.0

    def test_rows_independent_of_grouping(self, cfg, corpus):
        both = cell_rows(replace(cfg, epsilons=(0.3, 0.7)), corpus)
        single = cell_rows(replace(cfg, epsilons=(0.7,)), corpus)
        assert both[1] == single[0]
