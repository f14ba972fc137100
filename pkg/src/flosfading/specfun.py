"""Scalar special functions with overflow-safe (log-scaled) variants.

The modified Bessel function is evaluated by its power series for
``x <= 30`` and by SciPy's exponentially scaled ``ive`` beyond that. Both
routes return the natural log of the magnitude so that products such as
``exp(-x) * I_j(x)`` can be formed without overflow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from .errors import DomainError

SERIES_SWITCH = 30.0
MARCUM_TAIL = 1e-14


@dataclass(frozen=True)
class LogScaledReal:
    """A real number stored as ``sign * exp(log_magnitude)``."""

    log_magnitude: float
    sign: int = 1

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise DomainError(f"sign must be -1, 0 or 1, got {self.sign}")
        if self.sign == 0 and self.log_magnitude != -math.inf:
            object.__setattr__(self, "log_magnitude", -math.inf)

    @classmethod
    def from_float(cls, value: float) -> "LogScaledReal":
        if value == 0:
            return cls(-math.inf, 0)
        return cls(math.log(abs(value)), 1 if value > 0 else -1)

    @property
    def value(self) -> float:
        if self.sign == 0:
            return 0.0
        return self.sign * math.exp(self.log_magnitude)

    def __mul__(self, other: "LogScaledReal") -> "LogScaledReal":
        sign = self.sign * other.sign
        if sign == 0:
            return LogScaledReal(-math.inf, 0)
        return LogScaledReal(self.log_magnitude + other.log_magnitude, sign)

    def scaled(self, log_factor: float) -> "LogScaledReal":
        """Return the value multiplied by ``exp(log_factor)``."""
        if self.sign == 0:
            return self
        return LogScaledReal(self.log_magnitude + log_factor, self.sign)


def _check_finite(*args):
    for a in args:
        if not math.isfinite(a):
            raise DomainError(f"non-finite argument {a!r}")


def _log_bessel_i_series(order: float, x: float) -> float:
    # I_v(x) = (x/2)^v sum_m (x^2/4)^m / (m! Gamma(m+v+1)); all terms positive
    q = 0.25 * x * x
    term = 1.0
    rest = 0.0  # the series minus its leading 1, kept apart for log1p
    m = 0
    while True:
        m += 1
        term *= q / (m * (m + order))
        rest += term
        if term < 1e-17 * (1.0 + rest):
            break
    return order * math.log(0.5 * x) - math.lgamma(order + 1.0) + math.log1p(rest)


def bessel_i(order: float, x: float) -> LogScaledReal:
    """Modified Bessel function of the first kind ``I_order(x)``, log-scaled.

    Args:
        order: Non-negative order.
        x: Non-negative argument.
    """
    _check_finite(order, x)
    if order < 0 or x < 0:
        raise DomainError(f"bessel_i needs order >= 0 and x >= 0, got ({order}, {x})")
    if x == 0:
        return LogScaledReal(0.0, 1) if order == 0 else LogScaledReal(-math.inf, 0)
    if x <= SERIES_SWITCH:
        return LogScaledReal(_log_bessel_i_series(order, x), 1)
    scaled = float(special.ive(order, x))
    if scaled > 0 and math.isfinite(scaled):
        return LogScaledReal(math.log(scaled) + x, 1)
    return LogScaledReal(_log_bessel_i_series(order, x), 1)


def log_iv(order, x):
    """Vectorised ``log I_order(x)`` for arrays; ``-inf`` where the value is 0."""
    order = np.asarray(order, dtype=float)
    x = np.asarray(x, dtype=float)
    order, x = np.broadcast_arrays(order, x)
    with np.errstate(divide="ignore"):
        out = np.log(special.ive(order, x)) + x
    bad = ~np.isfinite(out) & (x > 0)
    if np.any(bad):
        out = out.copy()
        out[bad] = [_log_bessel_i_series(v, z) for v, z in zip(order[bad], x[bad])]
    zero = x == 0
    if np.any(zero):
        out = np.where(zero, np.where(order == 0, 0.0, -np.inf), out)
    return out


def laguerre(degree: int, alpha: float, x: float) -> float:
    """Generalised Laguerre polynomial ``L_degree^alpha(x)`` by recurrence."""
    _check_finite(alpha, x)
    if degree < 0 or int(degree) != degree:
        raise DomainError(f"degree must be a non-negative integer, got {degree}")
    if degree > 64:
        raise DomainError("laguerre supports degree <= 64")
    prev, cur = 1.0, 1.0 + alpha - x
    if degree == 0:
        return prev
    for j in range(1, int(degree)):
        prev, cur = cur, ((2 * j + 1 + alpha - x) * cur - (j + alpha) * prev) / (j + 1)
    return cur


def pochhammer(a: float, n: int) -> float:
    """Rising factorial ``(a)_n = a (a+1) ... (a+n-1)``."""
    if n < 0 or int(n) != n:
        raise DomainError(f"n must be a non-negative integer, got {n}")
    out = 1.0
    for j in range(int(n)):
        out *= a + j
    return out


def _marcum_terms(mu: float, a: float, b):
    _check_finite(mu, a)
    b = np.asarray(b, dtype=float)
    if mu <= 0 or a < 0 or np.any(b < 0) or not np.all(np.isfinite(b)):
        raise DomainError(f"marcum_q needs mu > 0, a >= 0, b >= 0; got ({mu}, {a}, {b})")
    mean = 0.5 * a * a
    if mean == 0:
        n = np.zeros(1)
        w = np.ones(1)
    else:
        # Poisson weights outside [lo, hi] carry less than MARCUM_TAIL in total
        lo = int(stats.poisson.ppf(0.5 * MARCUM_TAIL, mean))
        hi = int(stats.poisson.isf(0.5 * MARCUM_TAIL, mean)) + 1
        n = np.arange(max(lo - 1, 0), hi + 1, dtype=float)
        w = stats.poisson.pmf(n, mean)
    return n, w, 0.5 * b * b


def marcum_q(mu: float, a: float, b):
    """Generalised Marcum Q function ``Q_mu(a, b)``.

    Evaluated as the Poisson(a^2/2)-weighted sum of regularised upper
    incomplete gamma functions ``Q(mu + n, b^2/2)``. Accepts array ``b``.
    """
    n, w, half_b2 = _marcum_terms(mu, a, b)
    vals = special.gammaincc(mu + n[:, None], np.ravel(half_b2)[None, :])
    out = np.clip(w @ vals, 0.0, 1.0).reshape(np.shape(half_b2))
    return float(out) if out.ndim == 0 else out


def marcum_p(mu: float, a: float, b):
    """Complement ``1 - Q_mu(a, b)`` computed without cancellation."""
    n, w, half_b2 = _marcum_terms(mu, a, b)
    vals = special.gammainc(mu + n[:, None], np.ravel(half_b2)[None, :])
    out = np.clip(w @ vals, 0.0, 1.0).reshape(np.shape(half_b2))
    return float(out) if out.ndim == 0 else out
