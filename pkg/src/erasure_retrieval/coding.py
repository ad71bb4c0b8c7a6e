"""Repetition coding: TF-proportional plans and the token budget DP."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np


class UndefinedRateError(ValueError):
    """Raised when a plan transmits nothing, so its rate is undefined."""


def _snapped_ceil(x: np.ndarray) -> np.ndarray:
    # values within 1e-9 (relative) of an integer are treated as that integer,
    # so 0.4 * 3 / 0.6 does not ceil to 3 through rounding noise
    nearest = np.rint(x)
    close = np.abs(x - nearest) <= 1e-9 * np.maximum(1.0, np.abs(x))
    return np.where(close, nearest, np.ceil(x)).astype(np.int64)


def survival_probabilities(r: np.ndarray, epsilon: float) -> np.ndarray:
    """``1 - epsilon**r``; an untransmitted coordinate (r=0) never survives."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")
    r = np.asarray(r)
    if np.any(r < 0):
        raise ValueError("repetition counts must be non-negative")
    return 1.0 - np.power(float(epsilon), r.astype(np.float64))


def effective_rate(r: np.ndarray, M: int) -> float:
    total = int(np.sum(r))
    if total < 1:
        raise UndefinedRateError("no repetitions assigned; rate is undefined")
    return M / total


@dataclass(frozen=True)
class RepetitionPlan:
    r: np.ndarray = field(repr=False)
    R: float
    epsilon: float
    p: np.ndarray = field(repr=False)
    M: int

    @property
    def total(self) -> int:
        return int(self.r.sum())

    @property
    def rate(self) -> float:
        return effective_rate(self.r, self.M)

    def to_json(self) -> dict:
        nz = np.flatnonzero(self.r)
        return {
            "R": self.R,
            "epsilon": self.epsilon,
            "M": self.M,
            "effective_rate": self.rate,
            "r": {str(int(i)): int(self.r[i]) for i in nz},
        }


def proportional_plan(v: np.ndarray, M: int, R: float, epsilon: float) -> RepetitionPlan:
    """Repetitions ``ceil(M / (R * sum(v)) * v_i)`` for every active coordinate."""
    if not R > 0:
        raise ValueError(f"design rate R must be > 0, got {R}")
    if M < 1:
        raise ValueError(f"M must be >= 1, got {M}")
    v = np.asarray(v, dtype=np.float64)
    mass = v.sum()
    if not mass > 0:
        raise ValueError("query vector has no mass")
    r = np.zeros(v.shape, dtype=np.int64)
    active = v != 0
    r[active] = _snapped_ceil(M * v[active] / (R * mass))
    p = survival_probabilities(r, epsilon)
    return RepetitionPlan(r=r, R=float(R), epsilon=float(epsilon), p=p, M=int(M))


def budget_from_rate(L_q: int, R: float) -> int:
    """Total token budget ``L_q / R``, rounded half-to-even."""
    if not R > 0:
        raise ValueError(f"design rate R must be > 0, got {R}")
    return int(round(L_q / R))


def allocation_objective(scores: np.ndarray, r: np.ndarray, epsilon: float) -> float:
    """Expected preserved score mass, summed with ``math.fsum`` (order independent)."""
    scores = np.asarray(scores, dtype=np.float64)
    kept = survival_probabilities(r, epsilon)
    return math.fsum((kept * scores).tolist())


@dataclass(frozen=True)
class TokenBudgetAllocation:
    scores: np.ndarray = field(repr=False)
    B: int
    epsilon: float
    r: np.ndarray
    objective: float


def _tie_tolerance(scores: np.ndarray) -> float:
    return 1e-12 * max(float(np.sum(scores)), 1e-300)


def dp_budget_allocation(scores: np.ndarray, B: int, epsilon: float) -> TokenBudgetAllocation:
    """Maximize ``sum_i (1 - eps^r_i) * score_i`` subject to ``sum_i r_i = B``.

    Backward table ``V[i, b]`` holds the best value of tokens ``i..L-1`` using
    exactly ``b`` copies.  The forward pass picks, token by token, the
    smallest ``r_i`` that still reaches the optimum, which yields the
    lexicographically smallest optimal allocation.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 1:
        raise ValueError("scores must be a 1-d vector")
    if np.any(scores < 0) or not np.all(np.isfinite(scores)):
        raise ValueError("scores must be finite and non-negative")
    if B < 0:
        raise ValueError(f"budget B must be >= 0, got {B}")
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")
    L = scores.size
    if L == 0:
        if B != 0:
            raise ValueError("cannot spend a positive budget on zero tokens")
        return TokenBudgetAllocation(scores, 0, float(epsilon), np.zeros(0, np.int64), 0.0)

    reps = np.arange(B + 1)
    kept = 1.0 - np.power(float(epsilon), reps.astype(np.float64))
    gains = scores[:, None] * kept[None, :]  # (L, B+1)

    # lookup[b, r] = b - r, invalid where r > b
    diff = reps[:, None] - reps[None, :]
    valid = diff >= 0
    safe = np.where(valid, diff, 0)

    V = np.full((L + 1, B + 1), -np.inf)
    V[L, 0] = 0.0
    for i in range(L - 1, -1, -1):
        cand = np.where(valid, gains[i][None, :] + V[i + 1][safe], -np.inf)
        V[i] = cand.max(axis=1)

    tol = _tie_tolerance(scores)
    r = np.zeros(L, dtype=np.int64)
    b = B
    for i in range(L):
        cand = gains[i, : b + 1] + V[i + 1, b - reps[: b + 1]]
        choice = int(np.flatnonzero(cand >= V[i, b] - tol)[0])
        r[i] = choice
        b -= choice
    assert b == 0
    r.setflags(write=False)
    return TokenBudgetAllocation(
        scores=scores, B=int(B), epsilon=float(epsilon), r=r,
        objective=allocation_objective(scores, r, epsilon),
    )


def compositions(total: int, parts: int) -> Iterator[tuple[int, ...]]:
    """All non-negative integer vectors of length ``parts`` summing to ``total``, lexicographically."""
    if parts == 0:
        if total == 0:
            yield ()
        return
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in compositions(total - first, parts - 1):
            yield (first,) + rest


def exhaustive_allocation(scores: np.ndarray, B: int, epsilon: float) -> TokenBudgetAllocation:
    """Brute-force reference for :func:`dp_budget_allocation` (small inputs only)."""
    scores = np.asarray(scores, dtype=np.float64)
    tol = _tie_tolerance(scores)
    values = [(allocation_objective(scores, np.array(c), epsilon), c)
              for c in compositions(B, scores.size)]
    if not values:
        raise ValueError("no feasible allocation")
    best = max(v for v, _ in values)
    # compositions() is lexicographic, so the first near-optimal one is the smallest
    chosen = next(c for v, c in values if v >= best - tol)
    r = np.array(chosen, dtype=np.int64)
    return TokenBudgetAllocation(scores, int(B), float(epsilon), r,
                                 allocation_objective(scores, r, epsilon))
