"""Monte Carlo samplers for the t-step-ahead marginal predictive p(y_t).

Two exact samplers are provided:

* ``path``: draws the latent trajectory theta_0, ..., theta_T with beta
  innovations and Poisson observations.
* ``chain``: draws each y_t from the negative binomial one-step predictive of
  the current filter state and then updates the state.

Both produce the same joint law for (y_1, ..., y_T) and serve as oracles for
each other. Replicate ``i`` of an ensemble always uses ``RngStream(seed, i)``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, NumericError
from .model import b_closed_form
from .rng import RngStream, StreamBank
from .variates import (
    draw_beta,
    draw_gamma,
    draw_poisson,
    log_beta,
    log_standard_gamma,
    negbin_variates,
    poisson_variates,
)

__all__ = [
    "PathSample",
    "PredictiveEnsemble",
    "EnsembleSummary",
    "RngStream",
    "build_ensemble",
    "draw_beta",
    "draw_gamma",
    "draw_poisson",
    "sample_marginal_chain",
    "sample_path",
    "summarize",
]

SAMPLERS = ("path", "chain")


@dataclass(frozen=True)
class PathSample:
    """One latent trajectory.

    ``theta`` and ``a_trace`` have length T + 1 (times 0..T); ``eta`` and ``y``
    have length T (times 1..T). ``log_theta`` and ``log_eta`` keep the values
    that underflow in linear scale once a run of zeros drives a_t towards 0;
    with tiny shapes eta may round to 1.0 while ``log_one_minus_eta`` stays finite.
    """

    theta: np.ndarray
    eta: np.ndarray
    y: np.ndarray
    a_trace: np.ndarray
    log_theta: np.ndarray
    log_eta: np.ndarray
    log_one_minus_eta: np.ndarray


def _check_horizon(T):
    if int(T) != T or T < 1:
        raise InputError(f"horizon must be a positive integer, got {T}")
    return int(T)


def _simulate_path(spec, T, bank, record=False):
    n = len(bank)
    idx = np.arange(n)
    g = spec.gamma
    log_g = math.log(g)
    counts = np.empty((n, T), dtype=np.int64)
    a = np.full(n, spec.a0)
    log_theta = log_standard_gamma(a, bank, idx) - math.log(spec.b0)
    if record:
        log_thetas = [log_theta.copy()]
        log_etas = []
        log_1m_etas = []
        a_trace = [a.copy()]
    for t in range(1, T + 1):
        live = np.flatnonzero(a > 0)
        log_eta = np.zeros(n)
        log_1m_eta = np.full(n, -np.inf)
        if live.size:
            log_eta[live], log_1m_eta[live] = log_beta(g * a[live], (1.0 - g) * a[live], bank, idx[live])
        log_theta = log_theta + log_eta - log_g
        theta = np.exp(log_theta)
        if not np.all(np.isfinite(theta)):
            raise NumericError(f"theta overflowed at t={t}", t=t)
        try:
            y = poisson_variates(theta, bank, idx)
        except NumericError as exc:
            raise NumericError(f"{exc} at t={t}", t=t) from None
        counts[:, t - 1] = y
        a = g * a + y
        if record:
            log_thetas.append(log_theta.copy())
            log_etas.append(log_eta)
            log_1m_etas.append(log_1m_eta)
            a_trace.append(a.copy())
    if record:
        return (counts, np.array(log_thetas).T, np.array(log_etas).T, np.array(log_1m_etas).T,
                np.array(a_trace).T)
    return counts


def _simulate_chain(spec, T, bank):
    n = len(bank)
    idx = np.arange(n)
    g = spec.gamma
    counts = np.empty((n, T), dtype=np.int64)
    a = np.full(n, spec.a0)
    b = spec.b0
    for t in range(1, T + 1):
        live = np.flatnonzero(a > 0)
        y = np.zeros(n, dtype=np.int64)
        if live.size:
            try:
                y[live] = negbin_variates(g * a[live], np.full(live.size, g * b), bank, idx[live])
            except NumericError as exc:
                raise NumericError(f"{exc} at t={t}", t=t) from None
        counts[:, t - 1] = y
        a = g * a + y
        b = g * b + 1.0
    return counts


def sample_path(spec, T, rng):
    """Draw theta_0..theta_T, eta_1..eta_T and y_1..y_T from the latent-state model."""
    T = _check_horizon(T)
    counts, log_theta, log_eta, log_1m_eta, a_trace = _simulate_path(spec, T, rng, record=True)
    return PathSample(
        theta=np.exp(log_theta[0]),
        eta=np.exp(log_eta[0]),
        y=counts[0],
        a_trace=a_trace[0],
        log_theta=log_theta[0],
        log_eta=log_eta[0],
        log_one_minus_eta=log_1m_eta[0],
    )


def sample_marginal_chain(spec, T, rng):
    """Draw y_1..y_T by chaining negative binomial one-step predictives."""
    T = _check_horizon(T)
    return _simulate_chain(spec, T, rng)[0]


@dataclass(frozen=True)
class PredictiveEnsemble:
    """``counts[i, t - 1]`` is replicate i's draw of y_t."""

    counts: np.ndarray
    base_seed: int
    sampler: str

    @property
    def horizon(self):
        return self.counts.shape[1]

    @property
    def n_replicates(self):
        return self.counts.shape[0]


def _run_chunk(spec, T, base_seed, sampler, start, stop):
    bank = StreamBank(base_seed, np.arange(start, stop))
    if sampler == "path":
        return _simulate_path(spec, T, bank)
    return _simulate_chain(spec, T, bank)


def build_ensemble(spec, T, N, base_seed, sampler="path", n_jobs=1, chunk_size=1 << 15):
    """Simulate N independent replicates of y_1..y_T.

    Replicate i draws from ``RngStream(base_seed, i)``; chunking and
    ``n_jobs`` affect only scheduling, never the output.
    """
    T = _check_horizon(T)
    if int(N) != N or N < 1:
        raise InputError(f"number of replicates must be a positive integer, got {N}")
    if sampler not in SAMPLERS:
        raise InputError(f"sampler must be one of {SAMPLERS}, got {sampler!r}")
    N = int(N)
    bounds = [(s, min(s + chunk_size, N)) for s in range(0, N, chunk_size)]
    if n_jobs > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            parts = list(pool.map(lambda se: _run_chunk(spec, T, base_seed, sampler, *se), bounds))
    else:
        parts = [_run_chunk(spec, T, base_seed, sampler, s, e) for s, e in bounds]
    return PredictiveEnsemble(np.vstack(parts), int(base_seed), sampler)


def lower_quantiles(counts, q):
    """Column-wise smallest value v with empirical cdf(v) >= q."""
    return np.quantile(counts, q, axis=0, method="inverted_cdf").astype(np.int64)


@dataclass(frozen=True)
class EnsembleSummary:
    t: np.ndarray
    mean: np.ndarray
    variance: np.ndarray
    quantiles: dict
    max: np.ndarray
    zero_rate: np.ndarray
    ensemble: PredictiveEnsemble = field(repr=False)

    @property
    def running_max(self):
        return np.maximum.accumulate(self.max)

    def mc_standard_error(self):
        return np.sqrt(self.variance / self.ensemble.n_replicates)

    def histogram(self, t):
        """Unit-width bins 0..max(y_t): returns (count, frequency) arrays."""
        if not 1 <= t <= self.ensemble.horizon:
            raise InputError(f"histogram horizon {t} outside 1..{self.ensemble.horizon}")
        freq = np.bincount(self.ensemble.counts[:, t - 1])
        return np.arange(freq.size), freq


def summarize(ensemble, quantiles=(0.1, 0.5, 0.9)):
    counts = ensemble.counts
    if counts.size == 0:
        raise InputError("cannot summarize an empty ensemble")
    for q in quantiles:
        if not 0.0 < q < 1.0:
            raise InputError(f"quantile levels must lie in (0, 1), got {q}")
    return EnsembleSummary(
        t=np.arange(1, ensemble.horizon + 1),
        mean=counts.mean(axis=0),
        variance=counts.var(axis=0, ddof=1) if ensemble.n_replicates > 1 else np.zeros(ensemble.horizon),
        quantiles={q: lower_quantiles(counts, q) for q in quantiles},
        max=counts.max(axis=0),
        zero_rate=(counts == 0).mean(axis=0),
        ensemble=ensemble,
    )


def filtered_shape(spec, counts):
    """a_t after absorbing ``counts[..., :t]``; vectorized over leading axes."""
    a = np.full(counts.shape[:-1], spec.a0, dtype=float)
    for t in range(counts.shape[-1]):
        a = spec.gamma * a + counts[..., t]
    return a


def filtered_rate(spec, t):
    return b_closed_form(spec, t)
