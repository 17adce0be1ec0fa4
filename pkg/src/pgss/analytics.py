"""Exact predictive moments, p.g.f. recurrence and zero-count probabilities.

Notation: for a shape-one start, phi_t(s | b) is the p.g.f. of y_t and
p_t(b) = phi_t(0 | b) its zero mass. For shape a0 the p.g.f. is phi_t ** a0.
The recurrence folds phi along the rate trajectory b, gamma*b + 1, ...:

    phi_1(s | b) = (gamma*b / (gamma*b + 1 - s)) ** gamma
    phi_t(s | b) = (f * gamma*b / (gamma*b + 1 - f)) ** gamma,  f = phi_{t-1}(s | gamma*b + 1)

Every value is carried as its logarithm so that 1 - p keeps full relative
precision as p approaches 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, InternalError
from .model import ModelSpec, b_closed_form, b_star

# ----------------------------------------------------------------------------
# moments


def predictive_mean(spec, t):
    """E[y_t] = a0 / b0 at every horizon t >= 1."""
    if t < 1:
        raise InputError(f"horizon must be >= 1, got {t}")
    return spec.a0 / spec.b0


@dataclass(frozen=True)
class MomentTrack:
    """Moments of the marginal predictive for t = 1..T.

    ``var_a[i]`` is V[a_{t-1}] for ``t[i]``; ``b_trace`` runs over b_0..b_T.
    """

    t: np.ndarray
    mean_y: np.ndarray
    var_a: np.ndarray
    var_y: np.ndarray
    b_trace: np.ndarray


def variance_track(spec, T):
    if T < 1:
        raise InputError(f"horizon must be >= 1, got {T}")
    g = spec.gamma
    m = spec.a0 / spec.b0
    b = np.array([b_closed_form(spec, t) for t in range(T + 1)])
    var_a = np.zeros(T)  # a_0 is a known constant
    for t in range(2, T + 1):
        r = b[t - 1] / b[t - 2]
        var_a[t - 1] = r * r * var_a[t - 2] + r * m / g
    var_y = var_a / b[:T] ** 2 + b[1:] / (g * b[:T]) * m
    return MomentTrack(
        t=np.arange(1, T + 1),
        mean_y=np.full(T, m),
        var_a=var_a,
        var_y=var_y,
        b_trace=b,
    )


# ----------------------------------------------------------------------------
# p.g.f.


def _log_fold(log_f, gb):
    """log of (f * gb / (gb + 1 - f)) ** 1, i.e. before the outer power."""
    x = -np.expm1(log_f) / gb
    if np.any(x <= -1.0):
        raise InternalError("p.g.f. recurrence denominator is not positive")
    return log_f - np.log1p(x)


def _log_base(s, gb):
    """log of gb / (gb + 1 - s)."""
    return -np.log1p((1.0 - s) / gb)


def _check_s(s):
    s = float(s)
    if not -1.0 <= s < 1.0:
        raise InputError(f"p.g.f. argument must lie in [-1, 1), got {s}")
    return s


def _b_trajectory(b0, gamma, n):
    bs = 1.0 / (1.0 - gamma)
    b = bs + gamma ** np.arange(n) * (b0 - bs)
    b[:1] = b0
    return b


def log_pgf_unit(s, t, b0, gamma):
    """log phi_t(s | b0) for a shape-one start."""
    s = _check_s(s)
    if t < 1:
        raise InputError(f"horizon must be >= 1, got {t}")
    ModelSpec(1.0, b0, gamma)
    b = _b_trajectory(b0, gamma, t)
    log_phi = gamma * _log_base(s, gamma * b[t - 1])
    for k in range(t - 2, -1, -1):
        log_phi = gamma * _log_fold(log_phi, gamma * b[k])
    return float(log_phi)


def pgf_unit(s, t, b0, gamma):
    """phi_t(s | 1, b0), the p.g.f. of y_t when theta_0 ~ Gamma(1, b0)."""
    return math.exp(log_pgf_unit(s, t, b0, gamma))


def pgf(s, t, spec):
    """E[s ** y_t] for theta_0 ~ Gamma(a0, b0): the shape enters only as an exponent."""
    return math.exp(spec.a0 * log_pgf_unit(s, t, spec.b0, spec.gamma))


def pgf_general(s, t, spec):
    """E[s ** y_t] with the shape applied inside the outermost fold.

    Computes (f * gamma*b0 / (gamma*b0 + 1 - f)) ** (gamma * a0) with
    f = phi_{t-1}(s | b1) from the shape-one recurrence; an alternative order of
    evaluation to :func:`pgf`.
    """
    s = _check_s(s)
    g, a0, b0 = spec.gamma, spec.a0, spec.b0
    if t == 1:
        return math.exp(g * a0 * float(_log_base(s, g * b0)))
    log_f = log_pgf_unit(s, t - 1, g * b0 + 1.0, g)
    return math.exp(g * a0 * float(_log_fold(log_f, g * b0)))


# ----------------------------------------------------------------------------
# zero-count probabilities


@dataclass(frozen=True)
class ZeroProbTable:
    """Triangular table log p_t(b^(k)) for t >= 1, k >= 0, t + k <= T.

    ``b_traj[k]`` is b^(k) = gamma * b^(k-1) + 1 starting from b^(0) = b0, and
    ``log_rows[t - 1][k]`` holds log p_t(b^(k)).
    """

    gamma: float
    a0: float
    b_traj: np.ndarray
    log_rows: list = field(repr=False)

    @property
    def horizon(self):
        return len(self.log_rows)

    def p(self, t, k=0):
        return math.exp(self.log_rows[t - 1][k])

    @property
    def log_unit_zero_prob(self):
        """log p_t(b0) for t = 1..T."""
        return np.array([row[0] for row in self.log_rows])

    @property
    def unit_zero_prob(self):
        return np.exp(self.log_unit_zero_prob)

    @property
    def zero_prob(self):
        """P[y_t = 0 | a0, b0] = p_t(b0) ** a0 for t = 1..T."""
        return np.exp(self.a0 * self.log_unit_zero_prob)


def zero_prob_table(spec, T):
    """Fill the full triangle by dynamic programming, row by row in t (O(T^2))."""
    if T < 1:
        raise InputError(f"horizon must be >= 1, got {T}")
    g = spec.gamma
    b = _b_trajectory(spec.b0, g, T)
    gb = g * b
    row = g * _log_base(0.0, gb)
    rows = [row]
    for t in range(2, T + 1):
        row = g * _log_fold(row[1:], gb[: T - t + 1])
        rows.append(row)
    return ZeroProbTable(gamma=g, a0=spec.a0, b_traj=b, log_rows=rows)


def _log_fixed_point_sequence(gamma, T):
    """log p_t(b*) for t = 1..T; the rate stays at b* so the fold is one-dimensional."""
    gb = gamma / (1.0 - gamma)
    out = np.empty(T)
    lp = -gamma * math.log1p(1.0 / gb)
    out[0] = lp
    for t in range(1, T):
        lp = gamma * (lp - math.log1p(-math.expm1(lp) / gb))
        out[t] = lp
    return out


def _settling_index(b0, gamma):
    """Smallest K with b^(k) indistinguishable from b* in double precision for all k >= K."""
    bs = 1.0 / (1.0 - gamma)
    gap = abs(b0 - bs) / bs
    if gap <= 2.0**-54:
        return 0
    return max(0, math.ceil(math.log(gap / 2.0**-54) / -math.log(gamma)))


def log_zero_prob_sequence(spec, T):
    """log p_t(b0) for t = 1..T in O(K T) work.

    The rate trajectory reaches b* to double precision after K steps; beyond
    that, the inner part of every diagonal is the fixed-point sequence, and
    only the first K folds are applied per horizon (vectorized over t).
    """
    if T < 1:
        raise InputError(f"horizon must be >= 1, got {T}")
    g = spec.gamma
    K = _settling_index(spec.b0, g)
    if T <= K + 1:
        return zero_prob_table(spec, T).log_unit_zero_prob
    head = zero_prob_table(spec, K + 1).log_unit_zero_prob if K else np.empty(0)
    fixed = _log_fixed_point_sequence(g, T - K)
    gb = g * _b_trajectory(spec.b0, g, K)
    tail = fixed[: T - K].copy() if K else fixed
    # tail[j] starts as log p_{j+1}(b*) and becomes log p_{j+1+K}(b0)
    for k in range(K - 1, -1, -1):
        tail = g * _log_fold(tail, gb[k])
    return np.concatenate([head, tail[1:]]) if K else tail


def zero_prob_sequence(spec, T):
    """P[y_t = 0 | a0, b0] for t = 1..T."""
    return np.exp(spec.a0 * log_zero_prob_sequence(spec, T))


def first_crossing(spec, level=1.0 - 1e-3, t_max=10**7):
    """Smallest t with P[y_t = 0 | a0, b0] > level, or None if beyond ``t_max``."""
    target = math.log(level) / spec.a0
    T = 256
    while True:
        T = min(T, t_max)
        lp = log_zero_prob_sequence(spec, T)
        hit = np.flatnonzero(lp > target)
        if hit.size:
            return int(hit[0]) + 1
        if T >= t_max:
            return None
        T *= 4


# ----------------------------------------------------------------------------
# diagnostics


@dataclass(frozen=True)
class MonotoneReport:
    ok: bool
    strict: bool
    violations: list
    values: np.ndarray = field(repr=False)

    def __bool__(self):
        return self.ok


def check_nondecreasing(values, tol=1e-12, labels=None):
    """Report every adjacent pair with values[i + 1] < values[i] - tol."""
    values = np.asarray(values, dtype=float)
    labels = np.arange(values.size) if labels is None else list(labels)
    diff = np.diff(values)
    bad = np.flatnonzero(diff < -tol)
    violations = [(labels[i], labels[i + 1], float(values[i]), float(values[i + 1])) for i in bad]
    return MonotoneReport(
        ok=not violations,
        strict=bool(np.all(diff > 0)),
        violations=violations,
        values=values,
    )


def check_monotone_in_b(gamma, t, b_grid, tol=1e-12):
    """p_t(b) along an ascending grid of rates."""
    b_grid = np.asarray(b_grid, dtype=float)
    if np.any(np.diff(b_grid) <= 0) or np.any(b_grid <= 0):
        raise InputError("b_grid must be ascending positive rates")
    values = [pgf_unit(0.0, t, b, gamma) for b in b_grid]
    return check_nondecreasing(values, tol, labels=b_grid.tolist())


def check_monotone_in_t(spec, T, tol=1e-12):
    """P[y_t = 0 | a0, b0] for t = 1..T."""
    values = zero_prob_sequence(spec, T)
    return check_nondecreasing(values, tol, labels=range(1, T + 1))


def fixed_point_lower_bound(gamma):
    """gamma ** (gamma / (1 - gamma)), a floor for p_t(b*) at every t."""
    return gamma ** (gamma / (1.0 - gamma))


def fixed_point_gap(gamma, q):
    """log F(p) - log p at b = b*, with p = 1 - q and F the one-step fold.

    Written in terms of q so that values near p = 1 keep their precision.
    """
    q = np.asarray(q, dtype=float)
    return (gamma - 1.0) * np.log1p(-q) - gamma * np.log1p(q * (1.0 - gamma) / gamma)


@dataclass(frozen=True)
class GapReport:
    ok: bool
    gamma: float
    lower: float
    min_gap: float
    argmin_p: float
    n_points: int


def scan_fixed_point_gap(gamma, n=10_000, q_min=1e-10):
    """Check F(p) > p on p in [gamma**(gamma/(1-gamma)), 1 - q_min].

    The grid mixes n/2 points uniform in p with n/2 points log-uniform in 1 - p
    so that the neighbourhood of 1, where the gap is O((1-p)^2), is covered.
    """
    lower = fixed_point_lower_bound(gamma)
    q_max = 1.0 - lower
    q = np.concatenate([
        np.linspace(q_min, q_max, n // 2),
        np.geomspace(q_min, q_max, n - n // 2),
    ])
    gap = fixed_point_gap(gamma, q)
    i = int(np.argmin(gap))
    return GapReport(
        ok=bool(np.all(gap > 0)),
        gamma=gamma,
        lower=lower,
        min_gap=float(gap[i]),
        argmin_p=float(1.0 - q[i]),
        n_points=q.size,
    )


@dataclass(frozen=True)
class TowerCheck:
    lhs: float
    rhs_estimate: float
    mc_se: float

    @property
    def z(self):
        if self.mc_se == 0:
            return 0.0 if self.lhs == self.rhs_estimate else math.inf
        return (self.lhs - self.rhs_estimate) / self.mc_se

    def passes(self, n_sigma=3.0):
        return abs(self.lhs - self.rhs_estimate) <= n_sigma * self.mc_se


def tower_crosscheck(spec, t, t0, N, seed, sampler="chain"):
    """Compare P[y_{t+t0} = 0] from the DP against E[p_t(b_{t0}) ** a_{t0}].

    The expectation runs over y_1..y_{t0} simulated from the model; (a_{t0},
    b_{t0}) is the filter state after those observations. This is the tower
    identity lifted from a shape-one start to shape a0.
    """
    from .simulate import build_ensemble, filtered_shape

    if t < 1 or t0 < 0:
        raise InputError("need t >= 1 and t0 >= 0")
    lhs = math.exp(spec.a0 * log_zero_prob_sequence(spec, t + t0)[-1])
    b_t0 = b_closed_form(spec, t0)
    log_p = log_pgf_unit(0.0, t, b_t0, spec.gamma)
    if t0 == 0:
        value = math.exp(spec.a0 * log_p)
        return TowerCheck(lhs=lhs, rhs_estimate=value, mc_se=0.0)
    ens = build_ensemble(spec, t0, N, seed, sampler=sampler)
    a_t0 = filtered_shape(spec, ens.counts)
    vals = np.exp(a_t0 * log_p)
    return TowerCheck(lhs=lhs, rhs_estimate=float(vals.mean()), mc_se=float(vals.std(ddof=1) / math.sqrt(N)))


__all__ = [
    "GapReport",
    "MomentTrack",
    "MonotoneReport",
    "TowerCheck",
    "ZeroProbTable",
    "check_monotone_in_b",
    "check_monotone_in_t",
    "check_nondecreasing",
    "first_crossing",
    "fixed_point_gap",
    "fixed_point_lower_bound",
    "log_pgf_unit",
    "log_zero_prob_sequence",
    "pgf",
    "pgf_general",
    "pgf_unit",
    "predictive_mean",
    "scan_fixed_point_gap",
    "tower_crosscheck",
    "variance_track",
    "zero_prob_sequence",
    "zero_prob_table",
    "b_star",
]
