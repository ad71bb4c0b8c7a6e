"""Independent token-erasure channel."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, TypeVar

import numpy as np

from .coding import survival_probabilities
from .rng import SeedLike, as_generator

T = TypeVar("T")


@dataclass(frozen=True)
class ErasureOutcome:
    e: np.ndarray = field(repr=False)
    v_hat: np.ndarray = field(repr=False)


def sample_indicators(p: np.ndarray, seed: SeedLike) -> np.ndarray:
    """Independent Bernoulli(p_i) survival indicators as a 0/1 integer vector."""
    p = np.asarray(p, dtype=np.float64)
    if np.any(p < 0) or np.any(p > 1):
        raise ValueError("survival probabilities must lie in [0, 1]")
    u = as_generator(seed).random(p.shape)
    return (u < p).astype(np.int8)


def sample_indicators_copywise(r: np.ndarray, epsilon: float, seed: SeedLike) -> np.ndarray:
    """Same law as :func:`sample_indicators`, drawn one copy at a time.

    Slower by a factor of ``mean(r)``; kept to validate the aggregated sampler.
    """
    r = np.asarray(r, dtype=np.int64)
    rng = as_generator(seed)
    e = np.zeros(r.shape, dtype=np.int8)
    for i in np.flatnonzero(r):
        e[i] = bool(np.any(rng.random(r[i]) >= epsilon))
    return e


def reconstruct_query(v: np.ndarray, e: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    e = np.asarray(e)
    if v.shape != e.shape:
        raise ValueError(f"length mismatch: v has shape {v.shape}, e has shape {e.shape}")
    return v * e


def transmit(v: np.ndarray, p: np.ndarray, seed: SeedLike) -> ErasureOutcome:
    e = sample_indicators(p, seed)
    return ErasureOutcome(e=e, v_hat=reconstruct_query(v, e))


def survival_mask(r: np.ndarray, epsilon: float, seed: SeedLike) -> np.ndarray:
    return sample_indicators(survival_probabilities(r, epsilon), seed).astype(bool)


def erase_token_sequence(tokens: Sequence[T], r: np.ndarray, epsilon: float, seed: SeedLike) -> list[T]:
    """Tokens that keep at least one of their ``r_i`` copies, in original order."""
    r = np.asarray(r)
    if len(tokens) != r.size:
        raise ValueError(f"{len(tokens)} tokens but {r.size} repetition counts")
    keep = survival_mask(r, epsilon, seed)
    return [tok for tok, k in zip(tokens, keep) if k]
