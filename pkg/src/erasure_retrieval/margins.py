"""Score margins against the ground-truth document and their conditional moments.

For competitor ``j`` the reconstructed margin is affine in the erasure
indicators::

    Delta_j = sum_{i in S_q} C[j, i] + e_i * delta[j, i]
    C[j, i]     = zeta_i^2 (v_dj,i^2 - v_dk,i^2)
    delta[j, i] = 2 zeta_i^2 v_q,i (v_dk,i - v_dj,i)

Retrieval is correct iff every margin is strictly positive.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .corpus import DocumentCorpus
from .rng import SeedLike, as_generator

DEGENERATE_RTOL = 1e-12


@dataclass(frozen=True)
class MarginCoefficients:
    k: int
    C: np.ndarray = field(repr=False)  # (m, K_q)
    delta: np.ndarray = field(repr=False)  # (m, K_q)
    competitors: np.ndarray  # row -> document index
    support: np.ndarray = field(repr=False)

    @property
    def m(self) -> int:
        return int(self.C.shape[0])

    def margins(self, e: np.ndarray) -> np.ndarray:
        """Margins for indicator vector(s) ``e`` aligned with the support columns."""
        e = np.asarray(e, dtype=np.float64)
        return self.C.sum(axis=1) + e @ self.delta.T


@dataclass(frozen=True)
class MarginMoments:
    mu: np.ndarray
    sigma: np.ndarray = field(repr=False)

    @property
    def m(self) -> int:
        return int(self.mu.size)

    @property
    def variances(self) -> np.ndarray:
        return np.diag(self.sigma).copy()

    @property
    def degenerate(self) -> np.ndarray:
        """Rows whose margin is deterministic (variance <= 1e-12 * trace)."""
        var = self.variances
        return var <= DEGENERATE_RTOL * max(float(var.sum()), 1e-300)

    def to_json(self) -> str:
        return json.dumps({"mu": self.mu.tolist(), "sigma": self.sigma.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "MarginMoments":
        data = json.loads(text)
        return cls(mu=np.asarray(data["mu"], dtype=np.float64),
                   sigma=np.asarray(data["sigma"], dtype=np.float64))


def margin_coefficients(v: np.ndarray, corpus: DocumentCorpus, k: int, support) -> MarginCoefficients:
    support = np.asarray(support, dtype=np.int64)
    if support.size == 0:
        raise ValueError("query support is empty")
    if not 0 <= k < corpus.n:
        raise ValueError(f"ground-truth index {k} outside corpus of {corpus.n} documents")
    v = np.asarray(v, dtype=np.float64)
    w = corpus.idf[support] ** 2
    docs = corpus.tf[:, support]
    competitors = np.array([j for j in range(corpus.n) if j != k], dtype=np.int64)
    dj = docs[competitors]
    dk = docs[k][None, :]
    C = w * (dj * dj - dk * dk)
    delta = 2.0 * w * v[support] * (dk - dj)
    return MarginCoefficients(k=int(k), C=C, delta=delta, competitors=competitors, support=support)


def margin_moments(coeffs: MarginCoefficients, p: np.ndarray) -> MarginMoments:
    """Conditional mean and covariance of the margin vector given survival probabilities."""
    p = np.asarray(p, dtype=np.float64)
    if p.shape != (coeffs.C.shape[1],):
        raise ValueError(f"p has shape {p.shape}, expected ({coeffs.C.shape[1]},)")
    mu = coeffs.C.sum(axis=1) + coeffs.delta @ p
    weighted = coeffs.delta * (p * (1.0 - p))[None, :]
    sigma = weighted @ coeffs.delta.T
    sigma = 0.5 * (sigma + sigma.T)
    return MarginMoments(mu=mu, sigma=sigma)


@dataclass(frozen=True)
class CorrelationSummary:
    rho: np.ndarray = field(repr=False)
    defined: np.ndarray = field(repr=False)  # True where neither row is degenerate
    min_offdiag: float  # nan when no off-diagonal entry is defined
    mean_offdiag: float

    @property
    def nonnegative(self) -> bool:
        return bool(np.isnan(self.min_offdiag) or self.min_offdiag >= -1e-10)


def correlation_matrix(moments: MarginMoments) -> CorrelationSummary:
    var = moments.variances
    ok = ~moments.degenerate
    sd = np.sqrt(np.where(ok, var, 1.0))
    rho = moments.sigma / np.outer(sd, sd)
    defined = np.outer(ok, ok)
    rho = np.where(defined, np.clip(rho, -1.0, 1.0), 0.0)
    np.fill_diagonal(rho, np.where(ok, 1.0, 0.0))
    off = defined & ~np.eye(moments.m, dtype=bool)
    if off.any():
        vals = rho[off]
        return CorrelationSummary(rho, defined, float(vals.min()), float(vals.mean()))
    return CorrelationSummary(rho, defined, float("nan"), float("nan"))


@dataclass(frozen=True)
class EmpiricalMargins:
    mean: np.ndarray
    cov: np.ndarray
    mean_se: np.ndarray
    cov_se: np.ndarray
    trials: int


def empirical_margin_check(coeffs: MarginCoefficients, p: np.ndarray, trials: int,
                           seed: SeedLike, batch: int = 50_000) -> EmpiricalMargins:
    """Monte Carlo mean/covariance of the margins, for validating :func:`margin_moments`.

    ``cov_se`` is the plug-in standard error of each covariance entry,
    ``sqrt(Var[(X_j - m_j)(X_l - m_l)] / trials)``.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = as_generator(seed)
    p = np.asarray(p, dtype=np.float64)
    m = coeffs.m
    base = coeffs.C.sum(axis=1)
    # exact accumulation of the centered draws needs two passes; keep draws in memory
    chunks = []
    done = 0
    while done < trials:
        b = min(batch, trials - done)
        e = (rng.random((b, p.size)) < p).astype(np.float64)
        chunks.append(base + e @ coeffs.delta.T)
        done += b
    X = np.concatenate(chunks) if chunks else np.zeros((0, m))
    # shift by one draw first: a deterministic margin then centres to exact zeros
    Y = X - X[0]
    shift = Y.mean(axis=0)
    mean = X[0] + shift
    Z = Y - shift
    prod = Z[:, :, None] * Z[:, None, :]
    cov = prod.mean(axis=0)
    mean_se = np.sqrt(Z.var(axis=0) / trials)
    cov_se = np.sqrt(prod.var(axis=0) / trials)
    return EmpiricalMargins(mean=mean, cov=cov, mean_se=mean_se, cov_se=cov_se, trials=trials)


def iid_document_ensemble(K_q: int, n: int, seed: SeedLike, *, coordinate=None) -> MarginMoments:
    """Moments when document coordinates on the support are i.i.d. draws.

    Documents ``0..n-1`` get i.i.d. coordinates from ``coordinate(rng, size)``
    (default: Exp(1)); document 0 plays the ground truth.  Query weights,
    IDF values and survival probabilities are drawn from bounded ranges so
    the per-coordinate variance weights stay bounded and of order one.
    """
    rng = as_generator(seed)
    if coordinate is None:
        coordinate = lambda g, size: g.exponential(1.0, size)  # noqa: E731
    F = coordinate(rng, (n, K_q))
    zeta = rng.uniform(0.5, 1.5, K_q)
    vq = rng.uniform(0.5, 1.5, K_q)
    p = rng.uniform(0.2, 0.8, K_q)
    w = zeta ** 2
    C = w * (F[1:] ** 2 - F[0] ** 2)
    delta = 2.0 * w * vq * (F[0][None, :] - F[1:])
    coeffs = MarginCoefficients(k=0, C=C, delta=delta, competitors=np.arange(1, n),
                                support=np.arange(K_q))
    return margin_moments(coeffs, p)
