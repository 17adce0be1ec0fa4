"""Exact random variates driven by :mod:`pgss.rng` streams.

Each function takes parameter arrays aligned with ``idx``, the positions of the
streams in a :class:`~pgss.rng.StreamBank` that supply the randomness. A stream
consumes blocks only for its own element, so the values drawn for a replicate
never depend on which other replicates share the call.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln

from .errors import InputError, NumericError

_TWO_PI = 2.0 * math.pi
# PTRS is exact for any mean; inversion is cheaper below this.
_INVERSION_MAX_MEAN = 10.0
_MAX_POISSON_MEAN = 2.0**62


def log_standard_gamma(shape, bank, idx):
    """Log of Gamma(shape, 1) draws.

    Marsaglia-Tsang squeeze-free rejection; for shape < 1 the draw for
    shape + 1 is multiplied by U**(1/shape), done in logs so that tiny shapes
    underflow gracefully rather than to exact zero.
    """
    shape = np.asarray(shape, dtype=float)
    out = np.empty(shape.size)
    boost = shape < 1.0
    d = np.where(boost, shape + 1.0, shape) - 1.0 / 3.0
    c = 1.0 / np.sqrt(9.0 * d)
    pending = np.arange(shape.size)
    while pending.size:
        u = bank.blocks(idx[pending])
        z = np.sqrt(-2.0 * np.log(u[:, 0])) * np.cos(_TWO_PI * u[:, 1])
        dp, cp = d[pending], c[pending]
        v = 1.0 + cp * z
        ok = v > 0.0
        log_v3 = 3.0 * np.log(np.where(ok, v, 1.0))
        v3 = np.exp(log_v3)
        accept = ok & (np.log(u[:, 2]) < 0.5 * z * z + dp - dp * v3 + dp * log_v3)
        out[pending[accept]] = np.log(dp[accept]) + log_v3[accept]
        pending = pending[~accept]
    if boost.any():
        b_idx = np.flatnonzero(boost)
        u = bank.blocks(idx[b_idx])[:, 0]
        out[b_idx] += np.log(u) / shape[b_idx]
    return out


def log_beta(alpha, beta, bank, idx):
    """(log X, log(1 - X)) for X ~ Beta(alpha, beta), built from two gamma draws."""
    lx = log_standard_gamma(alpha, bank, idx)
    ly = log_standard_gamma(beta, bank, idx)
    total = np.logaddexp(lx, ly)
    return lx - total, ly - total


def poisson_variates(mean, bank, idx):
    """Poisson draws; mean 0 gives 0 without consuming randomness."""
    mean = np.asarray(mean, dtype=float)
    if not np.all(np.isfinite(mean)) or np.any(mean < 0):
        raise NumericError("Poisson mean must be finite and nonnegative")
    if np.any(mean > _MAX_POISSON_MEAN):
        raise NumericError("Poisson mean exceeds the int64 count range")
    out = np.zeros(mean.size, dtype=np.int64)
    small = np.flatnonzero((mean > 0) & (mean < _INVERSION_MAX_MEAN))
    if small.size:
        out[small] = _poisson_inversion(mean[small], bank, idx[small])
    large = np.flatnonzero(mean >= _INVERSION_MAX_MEAN)
    if large.size:
        out[large] = _poisson_ptrs(mean[large], bank, idx[large])
    return out


def _poisson_inversion(lam, bank, idx):
    u = bank.blocks(idx)[:, 0]
    k = np.zeros(lam.size, dtype=np.int64)
    p = np.exp(-lam)
    cdf = p.copy()
    active = np.flatnonzero(u > cdf)
    while active.size:
        k[active] += 1
        p[active] *= lam[active] / k[active]
        cdf[active] += p[active]
        # p == 0: the remaining tail is below double resolution
        active = active[(u[active] > cdf[active]) & (p[active] > 0)]
    return k


def _poisson_ptrs(lam, bank, idx):
    """Hormann's transformed rejection with squeeze (PTRS); exact for lam >= 10."""
    slam = np.sqrt(lam)
    loglam = np.log(lam)
    b = 0.931 + 2.53 * slam
    a = -0.059 + 0.02483 * b
    invalpha = 1.1239 + 1.1328 / (b - 3.4)
    vr = 0.9277 - 3.6224 / (b - 2.0)
    out = np.empty(lam.size, dtype=np.int64)
    pending = np.arange(lam.size)
    while pending.size:
        u = bank.blocks(idx[pending])
        U = u[:, 0] - 0.5
        V = u[:, 1]
        us = 0.5 - np.abs(U)
        ap, bp = a[pending], b[pending]
        k = np.floor((2.0 * ap / us + bp) * U + lam[pending] + 0.43)
        quick = (us >= 0.07) & (V <= vr[pending])
        feasible = ~quick & (k >= 0) & ~((us < 0.013) & (V > us))
        kf = np.where(feasible, k, 0.0)
        lhs = np.log(V) + np.log(invalpha[pending]) - np.log(ap / (us * us) + bp)
        rhs = -lam[pending] + kf * loglam[pending] - gammaln(kf + 1.0)
        accept = quick | (feasible & (lhs <= rhs))
        out[pending[accept]] = k[accept].astype(np.int64)
        pending = pending[~accept]
    return out


def negbin_variates(shape, rate, bank, idx):
    """Poisson(Gamma(shape, rate)) draws: the one-step predictive of the model."""
    log_lam = log_standard_gamma(shape, bank, idx) - np.log(rate)
    lam = np.exp(log_lam)
    if not np.all(np.isfinite(lam)):
        raise NumericError("negative binomial mixing draw overflowed")
    return poisson_variates(lam, bank, idx)


def _scalar_param(value, name):
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise InputError(f"{name} must be a real number, got {value!r}") from None
    if not (math.isfinite(value) and value > 0):
        raise InputError(f"{name} must be positive and finite, got {value}")
    return value


_ONE = np.zeros(1, dtype=np.intp)


def draw_gamma(shape, rate, rng):
    """One Gamma(shape, rate) draw from ``rng``."""
    shape = _scalar_param(shape, "shape")
    rate = _scalar_param(rate, "rate")
    return float(np.exp(log_standard_gamma(np.array([shape]), rng, _ONE)[0] - math.log(rate)))


def draw_beta(alpha, beta, rng):
    """One Beta(alpha, beta) draw from ``rng``."""
    alpha = _scalar_param(alpha, "alpha")
    beta = _scalar_param(beta, "beta")
    lx, _ = log_beta(np.array([alpha]), np.array([beta]), rng, _ONE)
    return float(np.exp(lx[0]))


def draw_poisson(mean, rng):
    """One Poisson(mean) draw from ``rng``."""
    mean = _scalar_param(mean, "mean")
    return int(poisson_variates(np.array([mean]), rng, _ONE)[0])
