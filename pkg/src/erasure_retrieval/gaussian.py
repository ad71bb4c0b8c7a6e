"""Univariate and multivariate normal CDFs.

All "at zero" functions return ``P(Z <= 0)`` componentwise for
``Z ~ N(mu, Sigma)``.  Internally they standardize to ``P(X <= a)`` with
``a_j = -mu_j / sigma_j`` and unit-variance ``X``.

Accuracy: the bivariate routine is accurate to roughly 1e-14, the trivariate
routine to better than 1e-9 on non-degenerate inputs (both checked against the
arcsine orthant identities in the test-suite).  The m-dimensional routine is a
randomized quasi-Monte Carlo estimator and reports its own standard error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import ndtr, ndtri
from scipy.stats import qmc

from .rng import SeedLike, as_generator

TWO_PI = 2.0 * math.pi
RHO_ONE = 1.0 - 1e-12  # |rho| beyond this is treated as exactly +-1
X_TAIL = 9.0  # standard normal mass beyond +-9 is below 1e-18
N_UNIFORM = 8
TVN_CHUNK = 512  # rows per vectorized block; bounds peak memory

_GL20_X, _GL20_W = leggauss(20)
_GL6 = leggauss(6)
_GL12 = leggauss(12)
_GL8_X, _GL8_W = leggauss(8)


@dataclass(frozen=True)
class OrthantEstimate:
    value: float
    std_error: float
    samples: int
    method: str  # closed-form | quadrature | randomized-qmc
    converged: bool = True


def std_normal_cdf(x):
    """Standard normal CDF (scipy ``ndtr``, erfc based; accepts +-inf)."""
    arr = np.asarray(x, dtype=np.float64)
    if np.any(np.isnan(arr)):
        raise ValueError("standard normal CDF of NaN")
    out = ndtr(arr)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# bivariate


def _bvnu(h: np.ndarray, k: np.ndarray, r: np.ndarray) -> np.ndarray:
    """``P(X > h, Y > k)`` for standard bivariate normals with correlation ``r``.

    Vectorized form of the Drezner-Wesolowsky / Genz scheme with
    Gauss-Legendre rules of 6, 12 or 20 points by |r|.
    """
    h, k, r = np.broadcast_arrays(np.asarray(h, float), np.asarray(k, float), np.asarray(r, float))
    h = h.ravel().copy()
    k = k.ravel().copy()
    r = np.clip(r.ravel(), -1.0, 1.0)
    out = np.empty_like(h)

    # infinite limits
    inf_h = np.isinf(h)
    inf_k = np.isinf(k)
    fin = ~(inf_h | inf_k)
    if np.any(~fin):
        hh, kk = h[~fin], k[~fin]
        val = np.where(hh == np.inf, 0.0, np.where(kk == np.inf, 0.0,
              np.where(hh == -np.inf, np.where(kk == -np.inf, 1.0, ndtr(-kk)), ndtr(-hh))))
        out[~fin] = val

    absr = np.abs(r)
    for lo_r, hi_r, (gx, gw) in ((0.0, 0.3, _GL6), (0.3, 0.75, _GL12), (0.75, 0.925, (_GL20_X, _GL20_W))):
        low = fin & (absr >= lo_r) & (absr < hi_r)
        if not np.any(low):
            continue
        hl, kl, rl = h[low], k[low], r[low]
        hk = hl * kl
        hs = 0.5 * (hl * hl + kl * kl)
        asr = np.arcsin(rl)
        sn = np.sin(asr[:, None] * (1.0 + gx[None, :]) * 0.5)
        terms = np.exp((sn * hk[:, None] - hs[:, None]) / (1.0 - sn * sn))
        out[low] = (terms @ gw) * asr / (2.0 * TWO_PI) + ndtr(-hl) * ndtr(-kl)

    high = fin & (absr >= 0.925)
    if np.any(high):
        hh, kh, rh = h[high], k[high].copy(), r[high]
        neg = rh < 0
        kh[neg] = -kh[neg]
        hk = hh * kh
        bvn = np.zeros_like(hh)
        inner = np.abs(rh) < 1.0
        if np.any(inner):
            hi, ki, hki = hh[inner], kh[inner], hk[inner]
            ri = rh[inner]
            as_ = (1.0 - ri) * (1.0 + ri)
            a = np.sqrt(as_)
            bs = (hi - ki) ** 2
            c = (4.0 - hki) / 8.0
            d = (12.0 - hki) / 16.0
            asr = -(bs / as_ + hki) / 2.0
            val = np.where(asr > -100.0,
                           a * np.exp(np.maximum(asr, -100.0))
                           * (1.0 - c * (bs - as_) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as_ * as_ / 5.0),
                           0.0)
            b = np.sqrt(bs)
            sp = math.sqrt(TWO_PI) * ndtr(-b / a)
            val = val - np.where(hki > -100.0,
                                 np.exp(-np.clip(hki, -100.0, 200.0) / 2.0) * sp * b
                                 * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0),
                                 0.0)
            ah = a / 2.0
            xs = (ah[:, None] * (_GL20_X[None, :] + 1.0)) ** 2
            rs = np.sqrt(1.0 - xs)
            asr2 = -(bs[:, None] / xs + hki[:, None]) / 2.0
            sp2 = 1.0 + c[:, None] * xs * (1.0 + d[:, None] * xs)
            ep = np.exp(-hki[:, None] * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs
            contrib = np.where(asr2 > -100.0, np.exp(np.maximum(asr2, -100.0)) * (ep - sp2), 0.0)
            val = val + ah * (contrib @ _GL20_W)
            bvn[inner] = -val / TWO_PI
        pos = rh > 0
        res = np.empty_like(hh)
        res[pos] = bvn[pos] + ndtr(-np.maximum(hh[pos], kh[pos]))
        negm = ~pos
        if np.any(negm):
            hn, kn, bn = hh[negm], kh[negm], bvn[negm]
            L = np.where(hn < 0, ndtr(kn) - ndtr(hn), ndtr(-hn) - ndtr(-kn))
            res[negm] = np.where(hn >= kn, -bn, L - bn)
        out[high] = res

    return np.clip(out, 0.0, 1.0)


def bvn_cdf(a, b, rho):
    """``P(X <= a, Y <= b)`` for standard normals with correlation ``rho`` (vectorized)."""
    shape = np.broadcast(np.asarray(a), np.asarray(b), np.asarray(rho)).shape
    out = _bvnu(-np.asarray(a, float), -np.asarray(b, float), np.asarray(rho, float))
    return out.reshape(shape) if shape else float(out[0])


def _check_psd(sigma: np.ndarray) -> float:
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise ValueError(f"covariance must be square, got shape {sigma.shape}")
    if not np.allclose(sigma, sigma.T, rtol=1e-10, atol=1e-14 * max(1.0, np.abs(sigma).max(initial=0))):
        raise ValueError("covariance is not symmetric")
    trace = float(np.trace(sigma))
    if np.any(np.diag(sigma) < -1e-12 * max(trace, 1e-300)):
        raise ValueError("covariance has a negative variance")
    if sigma.shape[0] and trace > 0:
        lam = np.linalg.eigvalsh(0.5 * (sigma + sigma.T))
        if lam[0] < -1e-10 * trace:
            raise ValueError(f"covariance is not positive semidefinite (min eigenvalue {lam[0]:.3e})")
    return trace


def _split_degenerate(mu: np.ndarray, sigma: np.ndarray, trace: float):
    """Drop zero-variance coordinates; return (feasible, kept index)."""
    var = np.diag(sigma)
    deg = var <= 1e-12 * max(trace, 1e-300)
    if np.any(mu[deg] > 0):
        return False, None
    return True, np.flatnonzero(~deg)


def bivariate_cdf_at_zero(mu, sigma) -> float:
    """``P(Z_1 <= 0, Z_2 <= 0)`` for ``Z ~ N(mu, sigma)``, rank-deficient inputs included."""
    mu = np.asarray(mu, dtype=np.float64).reshape(2)
    sigma = np.asarray(sigma, dtype=np.float64).reshape(2, 2)
    trace = _check_psd(sigma)
    ok, keep = _split_degenerate(mu, sigma, trace)
    if not ok:
        return 0.0
    if keep.size == 0:
        return 1.0
    sd = np.sqrt(np.diag(sigma)[keep])
    a = -mu[keep] / sd
    if keep.size == 1:
        return float(ndtr(a[0]))
    rho = sigma[0, 1] / (sd[0] * sd[1])
    return float(bvn_cdf(a[0], a[1], np.clip(rho, -1.0, 1.0)))


# ---------------------------------------------------------------------------
# trivariate


def _tvn_reduced(a: np.ndarray, rho: np.ndarray) -> float:
    """Trivariate CDF when some pair has |rho| ~ 1 (two coordinates coincide up to sign)."""
    pairs = ((0, 1, 2), (0, 2, 1), (1, 2, 0))
    corr = {(0, 1): rho[0], (0, 2): rho[1], (1, 2): rho[2]}
    for j, l, u in pairs:
        r = corr[(j, l)]
        if abs(r) < RHO_ONE:
            continue
        r_ju = corr[tuple(sorted((j, u)))]
        if r > 0:
            return float(bvn_cdf(min(a[j], a[l]), a[u], r_ju))
        lo, hi = -a[l], a[j]
        if lo >= hi:
            return 0.0
        return float(max(0.0, bvn_cdf(hi, a[u], r_ju) - bvn_cdf(lo, a[u], r_ju)))
    raise AssertionError("no degenerate pair found")


def tvn_cdf(a: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """``P(X_1 <= a_1, X_2 <= a_2, X_3 <= a_3)`` for unit-variance normals.

    ``a`` has shape (P, 3); ``rho`` has shape (P, 3) holding
    ``(rho_12, rho_13, rho_23)``.  The integral is taken over the coordinate
    least correlated with the other two: conditioning on it leaves a
    bivariate normal CDF, integrated against the normal density
    with Gauss-Legendre panels on a uniform grid refined at the transition
    regions of both conditional factors.
    """
    a = np.atleast_2d(np.asarray(a, dtype=np.float64))
    rho = np.atleast_2d(np.clip(np.asarray(rho, dtype=np.float64), -1.0, 1.0))
    if a.ndim != 2 or a.shape[1] != 3 or rho.shape != a.shape:
        raise ValueError(f"expected limits and correlations of shape (P, 3), got {a.shape} and {rho.shape}")
    P = a.shape[0]
    if P > TVN_CHUNK:
        return np.concatenate([tvn_cdf(a[i:i + TVN_CHUNK], rho[i:i + TVN_CHUNK])
                               for i in range(0, P, TVN_CHUNK)])
    out = np.empty(P)

    degenerate = np.any(np.abs(rho) >= RHO_ONE, axis=1)
    for idx in np.flatnonzero(degenerate):
        out[idx] = _tvn_reduced(a[idx], rho[idx])
    reg = np.flatnonzero(~degenerate)
    if reg.size == 0:
        return out
    a = a[reg]
    rho = rho[reg]

    # full correlation matrices to pick the conditioning variable per row
    R = np.empty((reg.size, 3, 3))
    R[:, 0, 0] = R[:, 1, 1] = R[:, 2, 2] = 1.0
    R[:, 0, 1] = R[:, 1, 0] = rho[:, 0]
    R[:, 0, 2] = R[:, 2, 0] = rho[:, 1]
    R[:, 1, 2] = R[:, 2, 1] = rho[:, 2]
    strength = np.abs(R).sum(axis=2) - 1.0
    c = strength.argmin(axis=1)
    others = np.array([[1, 2], [0, 2], [0, 1]])[c]
    rows = np.arange(reg.size)
    a1 = a[rows, c]
    a2 = a[rows, others[:, 0]]
    a3 = a[rows, others[:, 1]]
    r12 = R[rows, c, others[:, 0]]
    r13 = R[rows, c, others[:, 1]]
    r23 = R[rows, others[:, 0], others[:, 1]]
    s2 = np.sqrt((1.0 - r12) * (1.0 + r12))
    s3 = np.sqrt((1.0 - r13) * (1.0 + r13))
    rp = np.clip((r23 - r12 * r13) / (s2 * s3), -1.0, 1.0)

    # integrate phi(x) * Phi2(...) over x in (-inf, a1], truncated where phi is negligible
    top = np.minimum(a1, X_TAIL)
    bottom = np.minimum(-X_TAIL, top - 3.0)
    # breakpoints in x where a conditional factor switches on, at multiples of its width
    offsets = np.array([-8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0])
    with np.errstate(divide="ignore", invalid="ignore"):
        centre2 = np.where(r12 != 0, a2 / r12, np.inf)
        width2 = np.where(r12 != 0, s2 / np.abs(r12), np.inf)
        centre3 = np.where(r13 != 0, a3 / r13, np.inf)
        width3 = np.where(r13 != 0, s3 / np.abs(r13), np.inf)
        # the inner CDF bends where b2 = -sign(rp) * b3; sharp when |rp| -> 1
        sgn = np.where(rp < 0, 1.0, -1.0)
        slope = r12 / s2 + sgn * r13 / s3
        centre4 = np.where(slope != 0, (a2 / s2 + sgn * a3 / s3) / slope, np.inf)
        width4 = np.where(slope != 0, np.sqrt(1.0 - np.abs(rp)) / np.abs(slope), np.inf)
        xb = np.concatenate([centre2[:, None] + offsets * width2[:, None],
                             centre3[:, None] + offsets * width3[:, None],
                             centre4[:, None] + offsets * width4[:, None]], axis=1)
    xb = np.where(np.isfinite(xb), xb, bottom[:, None])
    uniform = bottom[:, None] + (top - bottom)[:, None] * np.linspace(0.0, 1.0, N_UNIFORM + 1)[None, :]
    brk = np.concatenate([uniform, np.clip(xb, bottom[:, None], top[:, None])], axis=1)
    brk.sort(axis=1)
    lo = brk[:, :-1]
    hi = brk[:, 1:]
    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    x = mid[:, :, None] + half[:, :, None] * _GL8_X[None, None, :]
    wts = half[:, :, None] * _GL8_W[None, None, :] * np.exp(-0.5 * x * x) / math.sqrt(TWO_PI)
    b2 = (a2[:, None, None] - r12[:, None, None] * x) / s2[:, None, None]
    b3 = (a3[:, None, None] - r13[:, None, None] * x) / s3[:, None, None]
    inner = bvn_cdf(b2, b3, np.broadcast_to(rp[:, None, None], b2.shape))
    out[reg] = np.clip((inner * wts).sum(axis=(1, 2)), 0.0, 1.0)
    return out


def trivariate_cdf_at_zero(mu, sigma) -> float:
    """``P(Z <= 0)`` for a 3-dimensional ``Z ~ N(mu, sigma)``."""
    mu = np.asarray(mu, dtype=np.float64).reshape(3)
    sigma = np.asarray(sigma, dtype=np.float64).reshape(3, 3)
    trace = _check_psd(sigma)
    ok, keep = _split_degenerate(mu, sigma, trace)
    if not ok:
        return 0.0
    if keep.size < 3:
        if keep.size == 0:
            return 1.0
        if keep.size == 1:
            j = keep[0]
            return float(ndtr(-mu[j] / math.sqrt(sigma[j, j])))
        return bivariate_cdf_at_zero(mu[keep], sigma[np.ix_(keep, keep)])
    sd = np.sqrt(np.diag(sigma))
    a = -mu / sd
    corr = sigma / np.outer(sd, sd)
    return float(tvn_cdf(a[None, :], np.array([[corr[0, 1], corr[0, 2], corr[1, 2]]]))[0])


def orthant_batch(mu: np.ndarray, sigma: np.ndarray) -> np.ndarray:
    """Vectorized ``P(Z <= 0)`` for a batch of 2- or 3-dimensional problems.

    ``mu`` is (P, d) and ``sigma`` is (P, d, d) with strictly positive
    variances (zero-variance coordinates must be removed by the caller).
    """
    mu = np.asarray(mu, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.float64)
    P, d = mu.shape
    if P == 0:
        return np.zeros(0)
    sd = np.sqrt(np.diagonal(sigma, axis1=1, axis2=2))
    a = -mu / sd
    if d == 2:
        rho = sigma[:, 0, 1] / (sd[:, 0] * sd[:, 1])
        return np.atleast_1d(bvn_cdf(a[:, 0], a[:, 1], np.clip(rho, -1.0, 1.0)))
    if d == 3:
        rho = np.stack([sigma[:, 0, 1] / (sd[:, 0] * sd[:, 1]),
                        sigma[:, 0, 2] / (sd[:, 0] * sd[:, 2]),
                        sigma[:, 1, 2] / (sd[:, 1] * sd[:, 2])], axis=1)
        return tvn_cdf(a, rho)
    raise ValueError(f"orthant_batch supports d in (2, 3), got {d}")


# ---------------------------------------------------------------------------
# m-dimensional


def _pivoted_cholesky(sigma: np.ndarray, b: np.ndarray, tol: float):
    """Cholesky with symmetric pivoting, choosing next the variable whose
    expected conditional probability is smallest.

    Returns ``(L, order)`` with ``L`` of shape (m, rank), rows in pivot order.
    Raises ``np.linalg.LinAlgError`` on a pivot that is clearly negative.
    """
    m = sigma.shape[0]
    S = sigma.copy()
    order = np.arange(m)
    bb = b.copy()
    L = np.zeros((m, m))
    y = np.zeros(m)
    rank = 0
    for k in range(m):
        rest = np.arange(k, m)
        cond_var = np.diag(S)[rest] - (L[rest, :k] ** 2).sum(axis=1)
        if cond_var.max() <= tol:
            if cond_var.min() < -1e3 * tol:
                raise np.linalg.LinAlgError("negative pivot in Cholesky")
            break
        sd = np.sqrt(np.maximum(cond_var, 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            lim = np.where(cond_var > tol, (bb[rest] - L[rest, :k] @ y[:k]) / sd, np.inf)
        j = k + int(np.argmin(lim))
        if j != k:
            for arr in (order, bb):
                arr[[k, j]] = arr[[j, k]]
            S[[k, j], :] = S[[j, k], :]
            S[:, [k, j]] = S[:, [j, k]]
            L[[k, j], :] = L[[j, k], :]
        piv = S[k, k] - L[k, :k] @ L[k, :k]
        if piv <= tol:
            raise np.linalg.LinAlgError("pivot vanished after reordering")
        L[k, k] = math.sqrt(piv)
        below = np.arange(k + 1, m)
        L[below, k] = (S[below, k] - L[below, :k] @ L[k, :k]) / L[k, k]
        # expected value of the truncated coordinate, used to rank the next pivot
        t = (bb[k] - L[k, :k] @ y[:k]) / L[k, k]
        ph = ndtr(t)
        y[k] = -math.exp(-0.5 * t * t) / math.sqrt(TWO_PI) / ph if ph > 1e-300 else t
        rank = k + 1
    return L[:, :rank], order


def _eigen_factor(sigma: np.ndarray, trace: float):
    """Rank-truncated factor ``A A^T = sigma`` rotated to lower-trapezoidal form."""
    from scipy.linalg import qr

    lam, V = np.linalg.eigh(sigma)
    keep = lam > 1e-12 * trace
    A = V[:, keep] * np.sqrt(lam[keep])[None, :]
    _, Rm, perm = qr(A.T, mode="economic", pivoting=True)
    Lt = Rm.T  # rows are sigma's rows in ``perm`` order
    signs = np.sign(np.diag(Lt))
    signs[signs == 0] = 1.0
    return Lt * signs[None, :], np.asarray(perm)


def _sov_structure(L: np.ndarray, b: np.ndarray):
    """Group constraint rows by their last non-zero column."""
    m, r = L.shape
    scale = np.abs(L).max(axis=1, keepdims=True)
    nz = np.abs(L) > 1e-13 * np.maximum(scale, 1e-300)
    last = np.where(nz.any(axis=1), r - 1 - np.argmax(nz[:, ::-1], axis=1), -1)
    groups = [np.flatnonzero(last == c) for c in range(r)]
    free_rows = np.flatnonzero(last == -1)
    return groups, free_rows


def _sov_batch(L: np.ndarray, b: np.ndarray, groups, U: np.ndarray) -> np.ndarray:
    """Separation-of-variables integrand at points ``U`` (shape (P, r-1))."""
    P = U.shape[0]
    r = L.shape[1]
    w = np.zeros((P, r))
    f = np.ones(P)
    for c in range(r):
        rows = groups[c]
        rhs = b[rows][None, :] - w[:, :c] @ L[rows, :c].T  # (P, |rows|)
        coef = L[rows, c]
        up = np.full(P, np.inf)
        lo = np.full(P, -np.inf)
        pos = coef > 0
        if np.any(pos):
            up = np.min(rhs[:, pos] / coef[pos], axis=1)
        if np.any(~pos):
            lo = np.max(rhs[:, ~pos] / coef[~pos], axis=1)
        plo = ndtr(lo)
        phi = ndtr(up)
        mass = np.maximum(phi - plo, 0.0)
        f = f * mass
        if c < r - 1:
            z = plo + U[:, c] * mass
            w[:, c] = ndtri(np.clip(z, 1e-300, 1.0 - 1e-16))
    return f


def mvn_cdf_at_zero(mu, sigma, target_se: float = 1e-4, max_samples: int = 2 ** 20,
                    seed: SeedLike = 0, randomizations: int = 8,
                    factor: str = "cholesky") -> OrthantEstimate:
    """``P(Z <= 0)`` for ``Z ~ N(mu, sigma)`` in any dimension.

    m <= 3 after removing zero-variance coordinates is evaluated by the
    closed-form / quadrature routines above.  Otherwise a separation-of-
    variables integrand is averaged over ``randomizations`` independently
    scrambled Sobol sequences; the point count doubles until the standard
    error across randomizations is at most ``target_se`` or ``max_samples``
    points have been spent (then ``converged`` is False).

    ``factor`` selects the covariance factorization: ``"cholesky"``
    (pivoted, with eigen fallback) or ``"eigen"``.
    """
    mu = np.asarray(mu, dtype=np.float64).ravel()
    sigma = np.asarray(sigma, dtype=np.float64)
    m = mu.size
    if m == 0:
        raise ValueError("dimension must be >= 1")
    if np.any(np.isnan(mu)):
        raise ValueError("mean contains NaN")
    sigma = sigma.reshape(m, m)
    trace = _check_psd(sigma)
    sigma = 0.5 * (sigma + sigma.T)
    ok, keep = _split_degenerate(mu, sigma, trace)
    if not ok:
        return OrthantEstimate(0.0, 0.0, 0, "closed-form")
    if keep.size == 0:
        return OrthantEstimate(1.0, 0.0, 0, "closed-form")
    mu = mu[keep]
    sigma = sigma[np.ix_(keep, keep)]
    d = mu.size
    if d == 1:
        return OrthantEstimate(float(ndtr(-mu[0] / math.sqrt(sigma[0, 0]))), 0.0, 0, "closed-form")
    if d == 2:
        return OrthantEstimate(bivariate_cdf_at_zero(mu, sigma), 0.0, 0, "quadrature")
    if d == 3:
        return OrthantEstimate(trivariate_cdf_at_zero(mu, sigma), 0.0, 0, "quadrature")

    b = -mu
    tol = 1e-12 * trace
    L = order = None
    if factor == "cholesky":
        try:
            L, order = _pivoted_cholesky(sigma, b, tol)
        except np.linalg.LinAlgError:
            L = None
    elif factor != "eigen":
        raise ValueError(f"unknown factor {factor!r}")
    if L is None:
        L, order = _eigen_factor(sigma, trace)
    bp = b[order]
    groups, free_rows = _sov_structure(L, bp)
    if np.any(bp[free_rows] < 0):
        return OrthantEstimate(0.0, 0.0, 0, "closed-form")
    r = L.shape[1]
    if r == 1:
        val = float(_sov_batch(L, bp, groups, np.zeros((1, 0)))[0])
        return OrthantEstimate(val, 0.0, 0, "closed-form")

    rng = as_generator(seed)
    engines = [qmc.Sobol(d=r - 1, scramble=True, seed=s) for s in rng.spawn(randomizations)]
    sums = np.zeros(randomizations)
    n_per = 0
    batch = 1024
    while True:
        for i, eng in enumerate(engines):
            U = eng.random(batch)
            sums[i] += _sov_batch(L, bp, groups, U).sum()
        n_per += batch
        means = sums / n_per
        se = float(means.std(ddof=1) / math.sqrt(randomizations))
        total = n_per * randomizations
        if se <= target_se:
            converged = True
            break
        if total * 2 > max_samples:
            converged = False
            break
        batch = n_per  # doubling keeps each Sobol prefix a power of two
    value = float(np.clip(means.mean(), 0.0, 1.0))
    return OrthantEstimate(value, se, total, "randomized-qmc", converged)
