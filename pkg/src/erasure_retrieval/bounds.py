"""Gaussian error-probability approximation and computable bounds from margin moments.

Sign convention, used everywhere in this module: the competitor error event
is ``E_j = {Delta_j <= 0}`` with ``Delta ~ N(mu, Sigma)``.  Its probability
and the probabilities of its intersections are Gaussian CDFs *at zero of
the margin itself*, ``P(Delta_J <= 0)``, so pair and triple terms receive
``mu`` unchanged.  Only the correct-retrieval orthant ``P(Delta > 0)`` flips
signs: it equals ``P(-Delta <= 0)``, evaluated with mean ``-mu``.

Deterministic margins (zero variance) are handled exactly: a row with
``mu_j <= 0`` is a certain error event, a row with ``mu_j > 0`` an impossible
one.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from itertools import combinations

import numpy as np
from scipy.special import ndtr

from .gaussian import mvn_cdf_at_zero, orthant_batch
from .margins import MarginMoments, correlation_matrix

# intersection terms bounded above by this are skipped (each contributes at most this much)
PRUNE_BELOW = 1e-15


@dataclass(frozen=True)
class QMCConfig:
    target_se: float = 1e-4
    max_samples: int = 2 ** 20
    randomizations: int = 8
    seed: int = 0


@dataclass(frozen=True)
class _Events:
    certain: int
    mu: np.ndarray  # non-degenerate rows only
    sigma: np.ndarray
    marginal: np.ndarray  # P(E_j) for the non-degenerate rows
    degenerate: tuple


def _events(moments: MarginMoments) -> _Events:
    deg = moments.degenerate
    certain = int(np.sum(deg & (moments.mu <= 0)))
    keep = np.flatnonzero(~deg)
    mu = moments.mu[keep]
    sigma = moments.sigma[np.ix_(keep, keep)]
    marginal = ndtr(-mu / np.sqrt(np.diag(sigma))) if keep.size else np.zeros(0)
    return _Events(certain, mu, sigma, marginal, tuple(int(j) for j in np.flatnonzero(deg)))


def bonferroni_first(moments: MarginMoments, counter: Counter | None = None) -> float:
    """Union bound ``sum_j Phi(-mu_j / sigma_j)`` (may exceed one)."""
    ev = _events(moments)
    if counter is not None:
        counter["univariate"] += ev.marginal.size
    return float(ev.certain + math.fsum(ev.marginal.tolist()))


def _intersection_sum(ev: _Events, order: int, counter: Counter | None) -> float:
    g = ev.mu.size
    if g < order:
        return 0.0
    idx = np.array(list(combinations(range(g), order)), dtype=np.int64)
    if counter is not None:
        counter[f"enumerated_{order}"] += idx.shape[0]
    # P(E_J) <= min_j P(E_j); skip terms that cannot matter
    live = ev.marginal[idx].min(axis=1) > PRUNE_BELOW
    idx = idx[live]
    if idx.shape[0] == 0:
        return 0.0
    if counter is not None:
        counter["bivariate" if order == 2 else "trivariate"] += idx.shape[0]
    mu = ev.mu[idx]
    sigma = ev.sigma[idx[:, :, None], idx[:, None, :]]
    return math.fsum(orthant_batch(mu, sigma).tolist())


def bonferroni_third(moments: MarginMoments, counter: Counter | None = None) -> float:
    """Third-order truncation ``B1 - B2 + B3`` with Gaussian pair/triple terms."""
    ev = _events(moments)
    c = ev.certain
    s1 = math.fsum(ev.marginal.tolist())
    s2 = _intersection_sum(ev, 2, counter)
    s3 = _intersection_sum(ev, 3, counter)
    if counter is not None:
        counter["univariate"] += ev.marginal.size
    # certain events intersect with everything, so they enter combinatorially
    b1 = c + s1
    b2 = math.comb(c, 2) + c * s1 + s2
    b3 = math.comb(c, 3) + math.comb(c, 2) * s1 + c * s2 + s3
    return float(b1 - b2 + b3)


@dataclass(frozen=True)
class SidakResult:
    value: float
    valid: bool


def sidak_bound(moments: MarginMoments, counter: Counter | None = None) -> SidakResult:
    """``1 - prod_j Phi(mu_j / sigma_j)``; ``valid`` iff no defined correlation is negative."""
    ev = _events(moments)
    if counter is not None:
        counter["univariate"] += ev.mu.size
    valid = correlation_matrix(moments).nonnegative
    if ev.certain:
        return SidakResult(1.0, valid)
    log_keep = np.log(ndtr(ev.mu / np.sqrt(np.diag(ev.sigma)))).sum() if ev.mu.size else 0.0
    return SidakResult(float(-np.expm1(log_keep)), valid)


@dataclass(frozen=True)
class PeEstimate:
    value: float
    std_error: float
    method: str
    converged: bool = True


def pe_mvn(moments: MarginMoments, qmc: QMCConfig = QMCConfig()) -> PeEstimate:
    """``1 - P(Delta > 0)`` under ``Delta ~ N(mu, Sigma)``."""
    ev = _events(moments)
    if ev.certain:
        return PeEstimate(1.0, 0.0, "closed-form")
    if ev.mu.size == 0:
        return PeEstimate(0.0, 0.0, "closed-form")
    est = mvn_cdf_at_zero(-ev.mu, ev.sigma, target_se=qmc.target_se,
                          max_samples=qmc.max_samples, seed=qmc.seed,
                          randomizations=qmc.randomizations)
    return PeEstimate(float(min(1.0, max(0.0, 1.0 - est.value))), est.std_error,
                      est.method, est.converged)


@dataclass(frozen=True)
class BoundReport:
    pe_mvn: float
    pe_mvn_se: float
    b1: float
    b1_clipped: float
    b3: float
    sidak: float
    sidak_valid: bool
    degenerate: tuple = field(default=())
    qmc_converged: bool = True

    @property
    def combined(self) -> float:
        """``min(B1, B3)`` restricted to [0, 1]."""
        return min(self.b1_clipped, max(self.b3, 0.0))

    def to_row(self) -> dict:
        row = asdict(self)
        row["degenerate"] = " ".join(str(j) for j in self.degenerate)
        row["combined"] = self.combined
        return row

    def to_json(self) -> dict:
        row = asdict(self)
        row["degenerate"] = list(self.degenerate)
        row["combined"] = self.combined
        return row


def full_report(moments: MarginMoments, qmc: QMCConfig = QMCConfig(),
                counter: Counter | None = None) -> BoundReport:
    pe = pe_mvn(moments, qmc)
    b1 = bonferroni_first(moments, counter)
    b3 = bonferroni_third(moments, counter)
    sd = sidak_bound(moments, counter)
    return BoundReport(
        pe_mvn=pe.value, pe_mvn_se=pe.std_error, b1=b1, b1_clipped=min(1.0, b1), b3=b3,
        sidak=sd.value, sidak_valid=sd.valid, degenerate=_events(moments).degenerate,
        qmc_converged=pe.converged,
    )
