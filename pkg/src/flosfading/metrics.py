"""Outage probability and ergodic capacity."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

from . import laplace
from .errors import DomainError, FitRangeTooSmall
from .flos import FLoSParams, cdf, cdf_descriptor, moment, pdf
from .laplace import DEFAULT_CONTOUR, ContourSpec
from .prony import ExpSumFit, default_segmentation, fit_log1p

LN2 = math.log(2.0)
COVERAGE_FACTOR = 40.0  # the fit must reach this multiple of the mean SNR
REFERENCE_ATOL = 1e-7


@dataclass(frozen=True)
class CapacityReport:
    value_bps_hz: float
    method: str
    fit_error_bound: float
    awgn_bound: float


def outage_probability(p: FLoSParams, gamma_th, contour: ContourSpec = DEFAULT_CONTOUR):
    """``Pr(gamma < gamma_th)``."""
    return cdf(p, gamma_th, contour)


def outage_asymptotic(p: FLoSParams, gamma_th):
    """High-SNR outage ``A^k exp(-B lam) gamma_th / (sigma^2 gamma_bar)``."""
    log_c = p.k * math.log(p.A) - p.B * p.lam - math.log(p.sigma_sq * p.gamma_bar)
    out = math.exp(log_c) * np.asarray(gamma_th, dtype=float)
    return float(out) if out.ndim == 0 else out


def partial_exp_cdf(p: FLoSParams, T: complex, x: float, contour: ContourSpec = DEFAULT_CONTOUR):
    """``F(T, x) = int_0^x exp(-T s) f(s) ds`` by numerical inversion.

    Complex ``T`` is accepted and gives a complex result.
    """
    if not math.isfinite(x) or x < 0:
        raise DomainError(f"x must be finite and >= 0, got {x}")
    if x == 0:
        return 0.0
    if T == 0:
        return float(cdf(p, x, contour))
    desc, front = cdf_descriptor(p, T)
    return front * laplace.invert(desc, contour, x / p.theta)


def _awgn_bound(p: FLoSParams) -> float:
    return math.log2(1.0 + p.mean)


@lru_cache(maxsize=32)
def _cached_fit(n_segments: int) -> ExpSumFit:
    return fit_log1p(default_segmentation(2.0 ** (n_segments - 1)))


def default_fit(x_max: float) -> ExpSumFit:
    """Default ``ln(1 + x)`` fit covering ``[0, x_max]`` (cached)."""
    segs = default_segmentation(x_max)
    return _cached_fit(len(segs))


def _tail_bound(p: FLoSParams, u: float, contour: ContourSpec) -> float:
    # int_u^inf ln(1+x) f <= int_u^inf x f <= sqrt(E[x^2] Pr(x > u))
    survival = max(1.0 - float(cdf(p, u, contour)), np.finfo(float).eps)
    return math.sqrt(moment(p, 2) * survival)


def _exp_sum_integral(p: FLoSParams, fit: ExpSumFit, contour: ContourSpec, shift: float) -> float:
    total = 0.0
    for l, u, c, T in fit.terms():
        for ck, Tk in zip(c, T):
            diff = partial_exp_cdf(p, Tk, u, contour) - partial_exp_cdf(p, Tk, l, contour)
            total += (ck * np.exp(Tk * shift) * diff).real
    return total / LN2


def _check_range(p: FLoSParams, fit: ExpSumFit):
    need = COVERAGE_FACTOR * p.mean
    if fit.lower != 0 or fit.upper < need:
        raise FitRangeTooSmall(f"fit covers [{fit.lower}, {fit.upper}], need [0, {need:.6g}]")


def ergodic_capacity(
    p: FLoSParams, fit: ExpSumFit | None = None, contour: ContourSpec = DEFAULT_CONTOUR
) -> CapacityReport:
    """Ergodic capacity from the exponential-sum fit of ``ln(1 + x)``.

    Each term contributes ``c [F(T, u) - F(T, l)]``. The reported bound
    adds the fit's sup error and a Cauchy-Schwarz bound on the mass beyond
    the last segment.
    """
    fit = default_fit(COVERAGE_FACTOR * p.mean) if fit is None else fit
    _check_range(p, fit)
    value = _exp_sum_integral(p, fit, contour, 0.0)
    bound = (fit.sup_error + _tail_bound(p, fit.upper, contour)) / LN2
    return CapacityReport(float(value), "prony", bound, _awgn_bound(p))


def ergodic_capacity_reference(p: FLoSParams, contour: ContourSpec = DEFAULT_CONTOUR) -> CapacityReport:
    """Ergodic capacity by adaptive quadrature of ``ln(1 + x) f(x) / ln 2``."""
    mean = p.mean

    def integrand(x):
        return math.log1p(x) * float(pdf(p, x, contour))

    edges = [0.0, 0.1 * mean, mean, 4.0 * mean, 16.0 * mean]
    total, err = 0.0, 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        v, e = integrate.quad(integrand, a, b, epsabs=REFERENCE_ATOL / 8, epsrel=1e-10, limit=200)
        total, err = total + v, err + e
    v, e = integrate.quad(integrand, edges[-1], np.inf, epsabs=REFERENCE_ATOL / 8, limit=200)
    total, err = total + v, err + e
    return CapacityReport(total / LN2, "reference_quadrature", err / LN2, _awgn_bound(p))


def ergodic_capacity_asymptotic(
    p: FLoSParams, fit: ExpSumFit | None = None, contour: ContourSpec = DEFAULT_CONTOUR
) -> float:
    """High-SNR capacity: ``ln x`` replaces ``ln(1 + x)`` via weights ``c exp(T)``."""
    fit = default_fit(COVERAGE_FACTOR * p.mean) if fit is None else fit
    _check_range(p, fit)
    return _exp_sum_integral(p, fit, contour, 1.0)


__all__ = [
    "CapacityReport",
    "default_fit",
    "ergodic_capacity",
    "ergodic_capacity_asymptotic",
    "ergodic_capacity_reference",
    "outage_asymptotic",
    "outage_probability",
    "partial_exp_cdf",
]
