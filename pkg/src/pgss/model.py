"""Poisson-gamma state space model: parameters, forward filter, one-step predictive."""
from __future__ import annotations

import math
import numbers
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import InputError


def _positive_finite(value, name):
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise InputError(f"{name} must be a real number, got {value!r}") from None
    if not (math.isfinite(value) and value > 0):
        raise InputError(f"{name} must be positive and finite, got {value}")
    return value


@dataclass(frozen=True)
class ModelSpec:
    """Model parameters: theta_0 ~ Gamma(a0, b0) (shape, rate) and discount ``gamma``."""

    a0: float
    b0: float
    gamma: float

    def __post_init__(self):
        object.__setattr__(self, "a0", _positive_finite(self.a0, "a0"))
        object.__setattr__(self, "b0", _positive_finite(self.b0, "b0"))
        g = _positive_finite(self.gamma, "gamma")
        if not g < 1.0:
            raise InputError(f"gamma must lie in (0, 1), got {g}")
        object.__setattr__(self, "gamma", g)

    @property
    def b_star(self):
        return b_star(self)

    @property
    def mean(self):
        """Prior mean of theta_0, which is also the predictive mean at every horizon."""
        return self.a0 / self.b0

    def initial_state(self):
        return FilterState(0, self.a0, self.b0)


@dataclass(frozen=True)
class FilterState:
    """Gamma(a, b) summary of theta at time ``t``.

    ``kind`` is ``"posterior"`` for theta_t | y_{1:t} and ``"prior"`` for
    theta_t | y_{1:t-1}; in the latter case ``t`` is the time being predicted.
    """

    t: int
    a: float
    b: float
    kind: str = "posterior"

    def __post_init__(self):
        if self.t < 0:
            raise InputError(f"t must be nonnegative, got {self.t}")
        object.__setattr__(self, "a", _positive_finite(self.a, "a"))
        object.__setattr__(self, "b", _positive_finite(self.b, "b"))
        if self.kind not in ("posterior", "prior"):
            raise InputError(f"unknown state kind {self.kind!r}")

    @property
    def mean(self):
        return self.a / self.b


def _count(y):
    if isinstance(y, bool):
        raise InputError(f"count must be a nonnegative integer, got {y!r}")
    if isinstance(y, numbers.Integral):
        y = int(y)
    elif isinstance(y, numbers.Real) and float(y).is_integer():
        y = int(y)
    else:
        raise InputError(f"count must be a nonnegative integer, got {y!r}")
    if y < 0:
        raise InputError(f"count must be a nonnegative integer, got {y}")
    return y


def propagate_prior(state, spec):
    """Time-(t+1) prior Gamma(gamma*a, gamma*b) from the time-t posterior."""
    g = spec.gamma
    return FilterState(state.t + 1, g * state.a, g * state.b, kind="prior")


def update(state, y, spec):
    """Absorb observation ``y`` at time ``state.t + 1``.

    a_t = gamma * a_{t-1} + y_t and b_t = gamma * b_{t-1} + 1.
    """
    y = _count(y)
    g = spec.gamma
    return FilterState(state.t + 1, g * state.a + y, g * state.b + 1.0)


def filter_series(spec, counts):
    """Run the forward filter; returns the posteriors for t = 0..len(counts)."""
    states = [spec.initial_state()]
    for y in counts:
        states.append(update(states[-1], y, spec))
    return states


def b_star(spec):
    """Fixed point 1 / (1 - gamma) of the rate recursion."""
    return 1.0 / (1.0 - spec.gamma)


def b_closed_form(spec, t):
    """b_t after ``t`` updates, without iterating.

    Evaluated as b* + gamma**t * (b0 - b*), which equals
    (1 - (1 - (1 - gamma) b0) gamma**t) / (1 - gamma) and is exact at b0 = b*.
    """
    if t < 0:
        raise InputError(f"t must be nonnegative, got {t}")
    if t == 0:
        return spec.b0
    bs = b_star(spec)
    return bs + spec.gamma**t * (spec.b0 - bs)


@dataclass(frozen=True)
class NegBinPredictive:
    """Negative binomial with gamma-mixing parameters ``shape`` and ``rate``.

    y ~ Poisson(lam), lam ~ Gamma(shape, rate); the p.g.f. is
    (rate / (rate + 1 - s)) ** shape, so P[y = 0] = (rate / (rate + 1)) ** shape.
    """

    shape: float
    rate: float

    def __post_init__(self):
        object.__setattr__(self, "shape", _positive_finite(self.shape, "shape"))
        object.__setattr__(self, "rate", _positive_finite(self.rate, "rate"))

    @property
    def prob(self):
        """Success probability in the scipy ``nbinom(n=shape, p=prob)`` convention."""
        return self.rate / (self.rate + 1.0)

    @property
    def mean(self):
        return self.shape / self.rate

    @property
    def variance(self):
        return self.mean * (self.rate + 1.0) / self.rate

    def logpmf(self, y):
        y = np.asarray(y)
        yf = y.astype(float)
        r, lam = self.shape, self.rate
        out = (
            special.gammaln(yf + r)
            - special.gammaln(r)
            - special.gammaln(yf + 1.0)
            + r * (np.log(lam) - np.log1p(lam))
            - yf * np.log1p(lam)
        )
        out = np.where(y < 0, -np.inf, out)
        return out if out.ndim else float(out)

    def pmf(self, y):
        out = np.exp(self.logpmf(y))
        return out if np.ndim(out) else float(out)

    def cdf(self, y):
        y = np.floor(np.asarray(y, dtype=float))
        out = np.where(y < 0, 0.0, special.betainc(self.shape, np.maximum(y, 0) + 1.0, self.prob))
        return out if out.ndim else float(out)

    def pgf(self, s):
        return (self.rate / (self.rate + 1.0 - s)) ** self.shape

    def quantile(self, q):
        """Smallest integer y with cdf(y) >= q."""
        if not 0.0 <= q <= 1.0:
            raise InputError(f"quantile level must be in [0, 1], got {q}")
        if self.cdf(0) >= q:
            return 0
        hi = max(1, int(self.mean))
        while self.cdf(hi) < q:
            hi *= 2
            if hi > 2**62:
                raise InputError(f"quantile {q} is not attained in the int64 range")
        lo = hi // 2 if hi > 1 else 0
        # invariant: cdf(lo) < q <= cdf(hi)
        if self.cdf(lo) >= q:
            lo = 0
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if self.cdf(mid) >= q:
                hi = mid
            else:
                lo = mid
        return hi

    def sample(self, rng, size=None):
        """Draw from ``rng`` (an :class:`~pgss.rng.RngStream`) as Poisson(Gamma(shape, rate))."""
        from .variates import negbin_variates

        n = 1 if size is None else int(size)
        shape, rate = np.array([self.shape]), np.array([self.rate])
        out = np.array([negbin_variates(shape, rate, rng, _ZERO_IDX)[0] for _ in range(n)], dtype=np.int64)
        return int(out[0]) if size is None else out


_ZERO_IDX = np.zeros(1, dtype=np.intp)


def one_step_predictive(state, spec):
    """Predictive law of y_{t+1} given the time-t posterior ``state``."""
    g = spec.gamma
    return NegBinPredictive(g * state.a, g * state.b)
