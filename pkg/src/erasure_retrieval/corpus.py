"""Zipf vocabularies, synthetic queries/documents and their TF / IDF vectors.

Indices are 0-based throughout: rank ``i`` in the usual 1-based Zipf
notation is stored at position ``i - 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .rng import SeedLike, as_generator


class EmptySupportError(ValueError):
    """Raised when a query has no non-stop-word token."""


def zipf_probabilities(N: int, alpha: float) -> np.ndarray:
    """Rank-frequency law ``pi_i = i^-alpha / sum_j j^-alpha`` for ranks 1..N."""
    if N < 1:
        raise ValueError(f"vocabulary size N must be >= 1, got {N}")
    if not alpha >= 0:
        raise ValueError(f"Zipf exponent alpha must be >= 0, got {alpha}")
    ranks = np.arange(1, N + 1, dtype=np.float64)
    weights = ranks ** (-float(alpha))
    return weights / weights.sum()


def stopword_ranks(l_s: int) -> frozenset[int]:
    """The ``l_s`` most frequent ranks, as 0-based indices."""
    if l_s < 0:
        raise ValueError(f"stop-word count l_s must be >= 0, got {l_s}")
    return frozenset(range(l_s))


@dataclass(frozen=True)
class ZipfVocabulary:
    N: int
    alpha: float
    probabilities: np.ndarray = field(repr=False)
    stopwords: frozenset[int] = frozenset()

    @classmethod
    def create(cls, N: int, alpha: float = 1.0, l_s: int = 0) -> "ZipfVocabulary":
        if l_s > N:
            raise ValueError(f"l_s={l_s} exceeds vocabulary size N={N}")
        probs = zipf_probabilities(N, alpha)
        probs.setflags(write=False)
        return cls(N=N, alpha=float(alpha), probabilities=probs, stopwords=stopword_ranks(l_s))

    def stopword_mask(self) -> np.ndarray:
        mask = np.zeros(self.N, dtype=bool)
        if self.stopwords:
            mask[sorted(self.stopwords)] = True
        return mask


def sample_counts(vocab: ZipfVocabulary, length: int, seed: SeedLike) -> np.ndarray:
    """Multinomial term counts of a text of ``length`` i.i.d. Zipf tokens."""
    if length < 0:
        raise ValueError(f"length must be >= 0, got {length}")
    rng = as_generator(seed)
    return rng.multinomial(length, vocab.probabilities).astype(np.int64)


@dataclass(frozen=True)
class QueryRepresentation:
    counts: np.ndarray = field(repr=False)
    L_q: int
    tf: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)
    support: np.ndarray
    M: int

    @property
    def K_q(self) -> int:
        return int(self.support.size)

    def to_json(self) -> dict:
        nz = np.flatnonzero(self.counts)
        return {
            "L_q": self.L_q,
            "M": self.M,
            "K_q": self.K_q,
            "counts": {str(int(i)): int(self.counts[i]) for i in nz},
            "v": {str(int(i)): float(self.v[i]) for i in self.support},
        }


def build_query(counts: np.ndarray, L_q: int, stopwords: Iterable[int] = ()) -> QueryRepresentation:
    """TF-normalize a count vector and zero out the stop-word coordinates."""
    counts = np.asarray(counts, dtype=np.int64)
    if counts.ndim != 1:
        raise ValueError("counts must be a 1-d vector")
    if np.any(counts < 0):
        raise ValueError("counts must be non-negative")
    if L_q < 1 or int(counts.sum()) != L_q:
        raise ValueError(f"counts sum to {int(counts.sum())}, expected L_q={L_q} >= 1")
    masked = counts.copy()
    stop = [i for i in stopwords if 0 <= i < counts.size]
    masked[stop] = 0
    M = int(masked.sum())
    if M == 0:
        raise EmptySupportError("query consists only of stop words")
    tf = counts / float(L_q)
    v = masked / float(L_q)
    support = np.flatnonzero(masked)
    for arr in (counts, tf, v, support):
        arr.setflags(write=False)
    return QueryRepresentation(counts=counts, L_q=int(L_q), tf=tf, v=v, support=support, M=M)


def idf_weights(presence: np.ndarray, n: int) -> np.ndarray:
    """``log((n + 1) / (n_i + 1))`` with the natural logarithm."""
    presence = np.asarray(presence)
    if n < 0:
        raise ValueError(f"document count n must be >= 0, got {n}")
    if np.any(presence < 0) or np.any(presence > n):
        raise ValueError("document frequencies must satisfy 0 <= n_i <= n")
    return np.log((n + 1.0) / (presence + 1.0))


@dataclass(frozen=True)
class DocumentCorpus:
    tf: np.ndarray = field(repr=False)  # (n, N) row-normalized term frequencies
    presence: np.ndarray = field(repr=False)  # n_i, documents containing term i
    idf: np.ndarray = field(repr=False)
    L_doc: int

    @property
    def n(self) -> int:
        return int(self.tf.shape[0])

    @property
    def N(self) -> int:
        return int(self.tf.shape[1])

    @classmethod
    def from_counts(cls, counts: np.ndarray) -> "DocumentCorpus":
        counts = np.asarray(counts, dtype=np.int64)
        lengths = counts.sum(axis=1)
        if np.any(lengths < 1):
            raise ValueError("every document needs at least one token")
        tf = counts / lengths[:, None].astype(np.float64)
        presence = (counts > 0).sum(axis=0)
        idf = idf_weights(presence, counts.shape[0])
        for arr in (tf, presence, idf):
            arr.setflags(write=False)
        L_doc = int(lengths[0]) if np.all(lengths == lengths[0]) else -1
        return cls(tf=tf, presence=presence, idf=idf, L_doc=L_doc)

    def to_json(self) -> dict:
        docs = []
        for row in self.tf:
            nz = np.flatnonzero(row)
            docs.append({str(int(i)): float(row[i]) for i in nz})
        nz = np.flatnonzero(self.idf)
        return {
            "n": self.n,
            "N": self.N,
            "L_doc": self.L_doc,
            "idf": {str(int(i)): float(self.idf[i]) for i in nz},
            "tf": docs,
        }


def generate_corpus(vocab: ZipfVocabulary, n: int, L_doc: int, seed: SeedLike) -> DocumentCorpus:
    """``n`` independent Zipf documents of ``L_doc`` tokens each."""
    if n < 2:
        raise ValueError(f"corpus needs n >= 2 documents, got {n}")
    if L_doc < 1:
        raise ValueError(f"L_doc must be >= 1, got {L_doc}")
    rng = as_generator(seed)
    counts = rng.multinomial(L_doc, vocab.probabilities, size=n)
    return DocumentCorpus.from_counts(counts)
