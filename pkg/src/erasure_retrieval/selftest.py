"""Quick oracle checks runnable from the command line (``selftest`` subcommand)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .bounds import bonferroni_third
from .coding import (allocation_objective, dp_budget_allocation, effective_rate,
                     exhaustive_allocation, proportional_plan)
from .corpus import ZipfVocabulary, build_query, sample_counts, EmptySupportError
from .gaussian import bivariate_cdf_at_zero, mvn_cdf_at_zero, trivariate_cdf_at_zero
from .margins import MarginMoments


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _bivariate() -> tuple[bool, str]:
    value = bivariate_cdf_at_zero(np.zeros(2), np.array([[1.0, 0.5], [0.5, 1.0]]))
    return abs(value - 1 / 3) <= 1e-6, f"{value:.12f} vs 1/3"


def _trivariate() -> tuple[bool, str]:
    sigma = np.full((3, 3), 0.5) + 0.5 * np.eye(3)
    value = trivariate_cdf_at_zero(np.zeros(3), sigma)
    return abs(value - 0.25) <= 1e-5, f"{value:.12f} vs 1/4"


def _independent_orthant() -> tuple[bool, str]:
    est = mvn_cdf_at_zero(np.zeros(5), np.eye(5))
    ok = abs(est.value - 1 / 32) <= 3 * est.std_error + 1e-12
    return ok, f"{est.value:.6f} +/- {est.std_error:.1e} vs 1/32"


def _inclusion_exclusion() -> tuple[bool, str]:
    vals = [bonferroni_third(MarginMoments(np.zeros(m), np.eye(m))) for m in (2, 3)]
    ok = abs(vals[0] - 0.75) <= 1e-4 and abs(vals[1] - 0.875) <= 1e-4
    return ok, f"m=2: {vals[0]:.6f}, m=3: {vals[1]:.6f}"


def _dp_oracle(instances: int = 60) -> tuple[bool, str]:
    rng = np.random.default_rng(11)
    for _ in range(instances):
        L = int(rng.integers(1, 6))
        B = int(rng.integers(0, 8))
        eps = float(rng.choice([0.1, 0.5, 0.9]))
        s = rng.random(L)
        dp = dp_budget_allocation(s, B, eps)
        ex = exhaustive_allocation(s, B, eps)
        if dp.objective != ex.objective:
            return False, f"mismatch on scores={s.tolist()} B={B} eps={eps}"
    return True, f"{instances} instances agree"


def _dp_example() -> tuple[bool, str]:
    a = dp_budget_allocation(np.array([0.9, 0.1]), 3, 0.5)
    ok = tuple(a.r) == (3, 0) and abs(a.objective - 0.7875) <= 1e-12
    return ok, f"r={tuple(int(x) for x in a.r)} value={a.objective}"


def _rate_bound(queries: int = 200) -> tuple[bool, str]:
    vocab = ZipfVocabulary.create(5000, 1.0)
    worst = 0.0
    for q in range(queries):
        counts = sample_counts(vocab, 20 + q % 81, (7, q))
        try:
            query = build_query(counts, int(counts.sum()))
        except EmptySupportError:
            continue
        for R in (1.0, 0.5, 0.37):
            plan = proportional_plan(query.v, query.M, R, 0.5)
            worst = max(worst, effective_rate(plan.r, query.M) / R)
    return worst <= 1.0, f"max effective/design rate {worst:.6f}"


CHECKS: dict[str, Callable[[], tuple[bool, str]]] = {
    "bivariate orthant (rho=0.5)": _bivariate,
    "trivariate orthant (rho=0.5)": _trivariate,
    "independent 5-d orthant": _independent_orthant,
    "third-order inclusion-exclusion": _inclusion_exclusion,
    "DP vs exhaustive search": _dp_oracle,
    "DP worked example": _dp_example,
    "effective rate <= R": _rate_bound,
}


def run_selftest() -> list[CheckResult]:
    results = []
    for name, check in CHECKS.items():
        try:
            ok, detail = check()
        except Exception as exc:  # a crash is a failed check, not an aborted run
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(name, bool(ok), detail))
    return results
