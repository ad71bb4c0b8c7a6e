"""Monte Carlo error estimates and query-averaged bounds.

Seeding: trial ``t`` draws its query from key ``(seed, STREAM_QUERY, t,
attempt)`` and its erasures from ``(seed, STREAM_ERASURE, t)``.  Neither
depends on epsilon, R or the other cells of a sweep, so estimates for
different operating points share their random numbers and any cell can be
recomputed alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.stats import binomtest

from . import rng as rngmod
from .bounds import BoundReport, QMCConfig, full_report
from .channel import erase_token_sequence, reconstruct_query, sample_indicators
from .coding import budget_from_rate, dp_budget_allocation, proportional_plan
from .corpus import (DocumentCorpus, EmptySupportError, QueryRepresentation, ZipfVocabulary,
                     build_query, generate_corpus, sample_counts)
from .embedding import VectorMapEmbedder, make_random_scorer, random_token_vectors, SCORERS
from .margins import margin_coefficients, margin_moments
from .retrieval import RetrievalDecision, ground_truth, retrieve, retrieve_cosine

MODES = ("tfidf", "token-dp")


class ConfigError(ValueError):
    """Invalid experiment parameter; ``key`` names the offending setting."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


class ResampleLimitError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    N: int = 5000
    alpha: float = 1.0
    n: int = 10
    L_doc: int = 20000
    L_q: int = 100
    l_s: int = 0
    R: float = 1.0
    epsilons: tuple = (0.5,)
    trials: int = 2000
    Q: int = 200
    target_se: float = 1e-4
    max_samples: int = 2 ** 20
    seed: int = 0
    mode: str = "tfidf"
    scorer: str = "semantic"
    embed_dim: int = 32
    max_resample: int = 1000

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        for key in ("N", "n", "L_doc", "L_q", "trials", "Q", "max_samples", "embed_dim", "max_resample"):
            if int(getattr(self, key)) < 1:
                raise ConfigError(key, f"must be >= 1, got {getattr(self, key)}")
        if self.n < 2:
            raise ConfigError("n", f"need at least 2 documents, got {self.n}")
        if not self.alpha >= 0:
            raise ConfigError("alpha", f"must be >= 0, got {self.alpha}")
        if not 0 <= self.l_s < self.N:
            raise ConfigError("l_s", f"must satisfy 0 <= l_s < N, got {self.l_s}")
        if not self.R > 0:
            raise ConfigError("R", f"must be > 0, got {self.R}")
        if len(self.epsilons) == 0:
            raise ConfigError("epsilon", "grid is empty")
        for e in self.epsilons:
            if not 0.0 <= e <= 1.0:
                raise ConfigError("epsilon", f"values must lie in [0, 1], got {e}")
        if not self.target_se > 0:
            raise ConfigError("target_se", f"must be > 0, got {self.target_se}")
        if self.seed < 0:
            raise ConfigError("seed", f"must be >= 0, got {self.seed}")
        if self.mode not in MODES:
            raise ConfigError("mode", f"must be one of {MODES}, got {self.mode!r}")
        if self.scorer not in (*SCORERS, "random"):
            raise ConfigError("scorer", f"unknown scorer {self.scorer!r}")

    @property
    def qmc(self) -> QMCConfig:
        return QMCConfig(target_se=self.target_se, max_samples=self.max_samples, seed=self.seed)

    def vocabulary(self) -> ZipfVocabulary:
        return ZipfVocabulary.create(self.N, self.alpha, self.l_s)

    def corpus(self) -> DocumentCorpus:
        key = (self.seed, rngmod.STREAM_CORPUS, self.n, self.N, self.L_doc)
        return generate_corpus(self.vocabulary(), self.n, self.L_doc, key)


@dataclass(frozen=True)
class SampledQuery:
    query: QueryRepresentation
    truth: RetrievalDecision
    resampled: int


def sample_query(config: ExperimentConfig, corpus: DocumentCorpus, index: int,
                 stream: int = rngmod.STREAM_QUERY, vocab: ZipfVocabulary | None = None) -> SampledQuery:
    """Draw a query whose ground truth is untied; rejected draws are counted."""
    vocab = vocab or config.vocabulary()
    for attempt in range(config.max_resample):
        counts = sample_counts(vocab, config.L_q, (config.seed, stream, index, attempt))
        try:
            query = build_query(counts, config.L_q, vocab.stopwords)
        except EmptySupportError:
            continue
        truth = ground_truth(query.v, corpus, query.support)
        if truth.tie:
            continue
        return SampledQuery(query, truth, attempt)
    raise ResampleLimitError(f"no usable query after {config.max_resample} draws (index {index})")


@dataclass(frozen=True)
class TrialOutcome:
    errors: np.ndarray  # one 0/1 indicator per epsilon
    truth: int
    decisions: tuple
    resampled: int


def _tfidf_trial(config, corpus, trial, epsilons, vocab) -> TrialOutcome:
    sq = sample_query(config, corpus, trial, vocab=vocab)
    q = sq.query
    u_key = (config.seed, rngmod.STREAM_ERASURE, trial)
    errors = np.zeros(len(epsilons), dtype=np.int8)
    decisions = []
    for j, eps in enumerate(epsilons):
        plan = proportional_plan(q.v, q.M, config.R, eps)
        e = np.zeros(config.N, dtype=np.int8)
        e[q.support] = sample_indicators(plan.p[q.support], u_key)
        dec = retrieve(reconstruct_query(q.v, e), corpus, q.support)
        decisions.append(dec.index)
        errors[j] = dec.index != sq.truth.index
    return TrialOutcome(errors, sq.truth.index, tuple(decisions), sq.resampled)


@dataclass
class _TokenContext:
    embed: VectorMapEmbedder
    doc_embeddings: np.ndarray


def _token_context(config: ExperimentConfig, corpus: DocumentCorpus) -> _TokenContext:
    table = random_token_vectors(config.N, config.embed_dim, (config.seed, rngmod.STREAM_EMBEDDING))
    embed = VectorMapEmbedder(table)
    return _TokenContext(embed, corpus.tf @ table)


def _token_trial(config, corpus, trial, epsilons, vocab, ctx: _TokenContext) -> TrialOutcome:
    stop = vocab.stopwords
    for attempt in range(config.max_resample):
        g = rngmod.keyed_generator(config.seed, rngmod.STREAM_QUERY, trial, attempt)
        drawn = g.choice(config.N, size=config.L_q, p=vocab.probabilities)
        tokens = [int(t) for t in drawn if int(t) not in stop]
        if not tokens:
            continue
        truth = retrieve_cosine(ctx.embed(tokens), ctx.doc_embeddings)
        if not truth.tie:
            break
    else:
        raise ResampleLimitError(f"no usable query after {config.max_resample} draws (trial {trial})")

    if config.scorer == "random":
        scores = make_random_scorer((config.seed, rngmod.STREAM_SCORES, trial))(tokens)
    else:
        scores = SCORERS[config.scorer](tokens, ctx.embed)
    B = budget_from_rate(len(tokens), config.R)
    errors = np.zeros(len(epsilons), dtype=np.int8)
    decisions = []
    for j, eps in enumerate(epsilons):
        alloc = dp_budget_allocation(scores, B, eps)
        kept = erase_token_sequence(tokens, alloc.r, eps, (config.seed, rngmod.STREAM_ERASURE, trial))
        if not kept:
            decisions.append(-1)  # nothing arrived: retrieval impossible, counted as an error
            errors[j] = 1
            continue
        dec = retrieve_cosine(ctx.embed(kept), ctx.doc_embeddings)
        decisions.append(dec.index)
        errors[j] = dec.index != truth.index
    return TrialOutcome(errors, truth.index, tuple(decisions), attempt)


def run_trial(config: ExperimentConfig, corpus: DocumentCorpus, trial: int,
              epsilons: Sequence[float] | None = None, *, _cache: dict | None = None) -> TrialOutcome:
    """One query through plan, channel and retrieval, for each epsilon given."""
    epsilons = tuple(config.epsilons if epsilons is None else epsilons)
    cache = _cache if _cache is not None else {}
    vocab = cache.get("vocab") or cache.setdefault("vocab", config.vocabulary())
    if config.mode == "tfidf":
        return _tfidf_trial(config, corpus, trial, epsilons, vocab)
    ctx = cache.get("token") or cache.setdefault("token", _token_context(config, corpus))
    return _token_trial(config, corpus, trial, epsilons, vocab, ctx)


@dataclass(frozen=True)
class ErrorEstimate:
    epsilon: float
    p_hat: float
    errors: int
    trials: int
    ci_low: float
    ci_high: float
    seed: int
    resampled: int = 0


def wilson_interval(errors: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    ci = binomtest(int(errors), int(trials)).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


def estimate_error(config: ExperimentConfig, corpus: DocumentCorpus) -> list[ErrorEstimate]:
    """Error frequency over ``config.trials`` trials for every epsilon in the grid."""
    if config.trials < 1:
        raise ConfigError("trials", "must be >= 1")
    eps = tuple(config.epsilons)
    counts = np.zeros(len(eps), dtype=np.int64)
    resampled = 0
    cache: dict = {}
    for t in range(config.trials):
        out = run_trial(config, corpus, t, eps, _cache=cache)
        counts += out.errors
        resampled += out.resampled
    result = []
    for e, c in zip(eps, counts):
        lo, hi = wilson_interval(int(c), config.trials)
        result.append(ErrorEstimate(float(e), float(c / config.trials), int(c), config.trials, lo, hi,
                                    config.seed, resampled))
    return result


@dataclass(frozen=True)
class AveragedBounds:
    epsilon: float
    Q: int
    mean: dict
    std_error: dict
    sidak_valid_frac: float
    resampled: int
    reports: tuple = field(default=(), repr=False)


_AVERAGED = ("pe_mvn", "b1", "b1_clipped", "b3", "sidak", "combined")


def query_reports(config: ExperimentConfig, corpus: DocumentCorpus, q: int,
                  epsilons: Sequence[float]) -> tuple[list[BoundReport], int]:
    """Bound reports of the ``q``-th bounds query at each epsilon."""
    sq = sample_query(config, corpus, q, stream=rngmod.STREAM_BOUNDS)
    query = sq.query
    coeffs = margin_coefficients(query.v, corpus, sq.truth.index, query.support)
    reports = []
    for eps in epsilons:
        plan = proportional_plan(query.v, query.M, config.R, eps)
        moments = margin_moments(coeffs, plan.p[query.support])
        qmc = replace(config.qmc, seed=(config.seed, rngmod.STREAM_QMC, q, int(round(eps * 1e9))))
        reports.append(full_report(moments, qmc))
    return reports, sq.resampled


def averaged_bounds(config: ExperimentConfig, corpus: DocumentCorpus, Q: int | None = None,
                    keep_reports: bool = False) -> list[AveragedBounds]:
    """Per-epsilon means (and standard errors) of the bound report over ``Q`` sampled queries."""
    if config.mode != "tfidf":
        raise ConfigError("mode", "analytic bounds exist only for the tfidf model")
    Q = config.Q if Q is None else Q
    if Q < 1:
        raise ConfigError("Q", "must be >= 1")
    eps = tuple(config.epsilons)
    per_eps: list[list[BoundReport]] = [[] for _ in eps]
    resampled = 0
    for q in range(Q):
        reports, r = query_reports(config, corpus, q, eps)
        resampled += r
        for j, rep in enumerate(reports):
            per_eps[j].append(rep)
    out = []
    for e, reps in zip(eps, per_eps):
        mean, se = {}, {}
        for name in _AVERAGED:
            vals = np.array([getattr(rp, name) for rp in reps])
            mean[name] = float(vals.mean())
            se[name] = float(vals.std(ddof=1) / math.sqrt(Q)) if Q > 1 else 0.0
        valid = float(np.mean([rp.sidak_valid for rp in reps]))
        out.append(AveragedBounds(float(e), Q, mean, se, valid, resampled,
                                  tuple(reps) if keep_reports else ()))
    return out


CSV_FIELDS = ("epsilon", "L_q", "R", "n", "trials", "pe_mc", "ci_lo", "ci_hi", "pe_mvn", "b1",
              "b1_clipped", "b3", "sidak", "sidak_valid_frac", "resampled_queries")


def cell_rows(config: ExperimentConfig, corpus: DocumentCorpus | None = None,
              with_bounds: bool = True) -> list[dict]:
    """One output row per epsilon of ``config`` (the sweep's cell schema)."""
    corpus = corpus or config.corpus()
    mc = estimate_error(config, corpus)
    bounds = averaged_bounds(config, corpus) if with_bounds and config.mode == "tfidf" else None
    rows = []
    for j, est in enumerate(mc):
        row = {
            "epsilon": est.epsilon, "L_q": config.L_q, "R": float(config.R), "n": config.n,
            "trials": est.trials, "pe_mc": est.p_hat, "ci_lo": est.ci_low, "ci_hi": est.ci_high,
        }
        resampled = est.resampled
        if bounds is not None:
            ab = bounds[j]
            row.update({k: ab.mean[k] for k in ("pe_mvn", "b1", "b1_clipped", "b3", "sidak")})
            row["sidak_valid_frac"] = ab.sidak_valid_frac
            resampled += ab.resampled
        else:
            row.update({k: float("nan") for k in ("pe_mvn", "b1", "b1_clipped", "b3", "sidak",
                                                  "sidak_valid_frac")})
        row["resampled_queries"] = resampled
        rows.append(row)
    return rows
