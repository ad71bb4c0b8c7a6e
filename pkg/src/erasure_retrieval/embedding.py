"""Token-level importance scores and a pluggable embedding interface.

No encoder ships with the package.  An *embedder* is any callable mapping a
sequence of token ids to a real vector; :class:`VectorMapEmbedder` averages
caller-supplied per-token vectors and is what the simulations use.
"""

from __future__ import annotations

from typing import Callable, Mapping, Sequence

import numpy as np

from .retrieval import cosine_distance
from .rng import SeedLike, as_generator

Embedder = Callable[[Sequence[int]], np.ndarray]


class VectorMapEmbedder:
    """Mean of per-token vectors looked up in a map (dict or 2-d array)."""

    def __init__(self, vectors: Mapping[int, np.ndarray] | np.ndarray):
        if isinstance(vectors, np.ndarray):
            self._table = np.asarray(vectors, dtype=np.float64)
            self.dim = self._table.shape[1]
        else:
            keys = sorted(vectors)
            self._index = {k: i for i, k in enumerate(keys)}
            self._table = np.stack([np.asarray(vectors[k], dtype=np.float64) for k in keys])
            self.dim = self._table.shape[1]
        self._mapped = not isinstance(vectors, np.ndarray)

    def __call__(self, tokens: Sequence[int]) -> np.ndarray:
        if len(tokens) == 0:
            return np.zeros(self.dim)
        rows = [self._index[t] for t in tokens] if self._mapped else list(tokens)
        return self._table[rows].mean(axis=0)

    def weighted(self, weights: np.ndarray) -> np.ndarray:
        """Embedding of a bag of tokens given by per-token weights (e.g. a TF vector)."""
        if self._mapped:
            raise TypeError("weighted embedding needs an array-backed table")
        w = np.asarray(weights, dtype=np.float64)
        return (w @ self._table) / w.sum()


def random_token_vectors(N: int, dim: int, seed: SeedLike) -> np.ndarray:
    return as_generator(seed).standard_normal((N, dim))


def semantic_importance(tokens: Sequence[int], embed: Embedder) -> np.ndarray:
    """Leave-one-out cosine drop: ``1 - cos(z_full, z_without_i)`` per token.

    A token whose removal empties the query (a one-token query) gets score 1.
    """
    z_full = embed(tokens)
    scores = np.empty(len(tokens))
    for i in range(len(tokens)):
        rest = list(tokens[:i]) + list(tokens[i + 1:])
        z = embed(rest)
        if len(rest) == 0 or not np.any(z):
            scores[i] = 1.0
        else:
            scores[i] = cosine_distance(z_full, z)
    return np.maximum(scores, 0.0)


def uniform_scores(tokens: Sequence[int], embed: Embedder | None = None) -> np.ndarray:
    return np.ones(len(tokens))


def make_random_scorer(seed: SeedLike) -> Callable[..., np.ndarray]:
    """Scorer drawing i.i.d. Uniform(0, 1) scores; same seed, same scores."""

    def score(tokens: Sequence[int], embed: Embedder | None = None) -> np.ndarray:
        return as_generator(seed).random(len(tokens))

    return score


SCORERS = {
    "uniform": uniform_scores,
    "semantic": semantic_importance,
}
