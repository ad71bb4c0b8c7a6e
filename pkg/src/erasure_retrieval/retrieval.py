"""Minimum-distance retrieval with TF-IDF weighted squared distances or cosine distance."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .corpus import DocumentCorpus

TIE_RTOL = 1e-12


@dataclass(frozen=True)
class RetrievalDecision:
    scores: np.ndarray = field(repr=False)
    index: int
    tie: bool


def compensated_row_sums(terms: np.ndarray) -> np.ndarray:
    """Row sums by a pairwise cascade of error-free TwoSum steps.

    Each level adds neighbouring columns and keeps the exact rounding error;
    the collected errors are added back at the end, giving compensated-sum
    accuracy with only log2(K) vectorized passes.
    """
    x = np.atleast_2d(np.asarray(terms, dtype=np.float64))
    err = np.zeros(x.shape[0])
    while x.shape[1] > 1:
        if x.shape[1] % 2:
            x = np.concatenate([x, np.zeros((x.shape[0], 1))], axis=1)
        a = x[:, 0::2]
        b = x[:, 1::2]
        s = a + b
        bv = s - a
        err += ((a - (s - bv)) + (b - bv)).sum(axis=1)
        x = s
    if x.shape[1] == 0:
        return err
    return x[:, 0] + err


def tfidf_score(v_hat: np.ndarray, v_d: np.ndarray, zeta: np.ndarray, support) -> float:
    """``sum_{i in support} zeta_i^2 (v_hat_i - v_d_i)^2``."""
    idx = np.asarray(support, dtype=np.int64)
    v_hat = np.asarray(v_hat, dtype=np.float64)
    v_d = np.asarray(v_d, dtype=np.float64)
    zeta = np.asarray(zeta, dtype=np.float64)
    terms = zeta[idx] ** 2 * (v_hat[idx] - v_d[idx]) ** 2
    return math.fsum(terms.tolist())


def tfidf_scores(v_hat: np.ndarray, corpus: DocumentCorpus, support) -> np.ndarray:
    """Scores of every document in the corpus against ``v_hat``."""
    idx = np.asarray(support, dtype=np.int64)
    w = corpus.idf[idx] ** 2
    diff = np.asarray(v_hat, dtype=np.float64)[idx][None, :] - corpus.tf[:, idx]
    return compensated_row_sums(w[None, :] * diff * diff)


def decide(scores: np.ndarray) -> RetrievalDecision:
    """Argmin with ties (relative 1e-12) resolved to the smallest index."""
    scores = np.asarray(scores, dtype=np.float64)
    if scores.size == 0:
        raise ValueError("no candidates to choose from")
    best = scores.min()
    tied = np.flatnonzero(scores - best <= TIE_RTOL * np.maximum(np.abs(scores), abs(best)))
    return RetrievalDecision(scores=scores, index=int(tied[0]), tie=bool(tied.size > 1))


def retrieve(v_hat: np.ndarray, corpus: DocumentCorpus, support) -> RetrievalDecision:
    return decide(tfidf_scores(v_hat, corpus, support))


def ground_truth(v: np.ndarray, corpus: DocumentCorpus, support) -> RetrievalDecision:
    """The decision taken on the unerased query."""
    return retrieve(v, corpus, support)


def cosine_distance(z1: np.ndarray, z2: np.ndarray) -> float:
    z1 = np.asarray(z1, dtype=np.float64)
    z2 = np.asarray(z2, dtype=np.float64)
    n1 = np.linalg.norm(z1)
    n2 = np.linalg.norm(z2)
    if n1 == 0 or n2 == 0:
        raise ValueError("cosine distance is undefined for a zero vector")
    cos = float(z1 @ z2) / (n1 * n2)
    return 1.0 - min(1.0, max(-1.0, cos))


def cosine_distances(z: np.ndarray, docs: np.ndarray) -> np.ndarray:
    """Cosine distance from ``z`` to every row of ``docs``."""
    z = np.asarray(z, dtype=np.float64)
    docs = np.asarray(docs, dtype=np.float64)
    nz = np.linalg.norm(z)
    nd = np.linalg.norm(docs, axis=1)
    if nz == 0 or np.any(nd == 0):
        raise ValueError("cosine distance is undefined for a zero vector")
    cos = (docs @ z) / (nd * nz)
    return 1.0 - np.clip(cos, -1.0, 1.0)


def retrieve_cosine(z_hat: np.ndarray, doc_embeddings: np.ndarray) -> RetrievalDecision:
    return decide(cosine_distances(z_hat, doc_embeddings))
