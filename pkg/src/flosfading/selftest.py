"""Fast invariant checks used by ``flos selftest``."""
from __future__ import annotations

import math

import numpy as np
from scipy import integrate, special

from . import aging, flos, metrics, prony, sampler


def _mixture_weights():
    p = flos.FLoSParams(1.0, 10.0, 3, lam=5.0)
    total = sum(c.weight for c in flos.mixture_decompose(p))
    return abs(total - 1.0) < 1e-12, f"|sum - 1| = {abs(total - 1.0):.2e}"


def _dual_pdf():
    p = flos.FLoSParams(1.0, 2.0, 2, lam=1.0)
    x = np.linspace(0.05, 5.0, 12)
    err = float(np.max(np.abs(flos.pdf_psi2(p, x) / flos.pdf_int_k(p, x) - 1.0)))
    return err < 1e-6, f"max rel diff {err:.2e}"


def _dual_cdf():
    p = flos.FLoSParams(1.0, 5.0, 3, lam=2.0)
    x = np.linspace(0.1, 5.0, 8)
    err = float(np.max(np.abs(flos.cdf_contour(p, x) - flos.cdf_mixture(p, x))))
    return err < 1e-6, f"max abs diff {err:.2e}"


def _mgf_quadrature():
    p = flos.FLoSParams(1.0, 3.0, 1.5, lam=2.0)
    val = integrate.quad(lambda x: math.exp(-x) * flos.pdf(p, x), 0, np.inf, epsabs=1e-12)[0]
    err = abs(val - flos.mgf(p, -1.0))
    return err < 1e-6, f"|mgf - quad| = {err:.2e}"


def _mean():
    p = flos.FLoSParams(2.5, 4.0, 2.5, lam=3.0)
    err = abs(flos.moment(p, 1) - 2.5)
    return err < 1e-12, f"|E - gamma_bar| = {err:.2e}"


def _sampler_ks():
    p = flos.FLoSParams(1.0, 10.0, 2, lam=3.0)
    draws = sampler.sample_snr(p, sampler.SeededStream(2024), 100_000)
    grid = np.linspace(0.0, draws.max(), 2001)
    cdf = flos.cdf(p, grid)
    ks = sampler.ks_statistic(draws, lambda d: np.interp(d, grid, cdf))
    limit = 1.63 / math.sqrt(draws.size)
    return ks < limit, f"KS {ks:.2e} < {limit:.2e}"


def _outage_asymptote():
    p = flos.FLoSParams(1e5, 10 ** 1.3, 1.5, lam=5.0)
    ratio = metrics.outage_probability(p, 1.0) / metrics.outage_asymptotic(p, 1.0)
    return abs(ratio - 1.0) < 0.02, f"ratio {ratio:.4f}"


def _rayleigh_capacity():
    p = flos.FLoSParams(1.0, 0.0, 1.0)
    exact = math.e * special.exp1(1.0) / math.log(2.0)
    err = abs(metrics.ergodic_capacity(p).value_bps_hz - exact)
    return err < 2e-3, f"|EC - e E1(1)/ln 2| = {err:.2e}"


def _prony_synthetic():
    h = 0.02
    x = h * np.arange(101)
    c, T = prony.prony_fit(2 * np.exp(-x) + np.exp(-3 * x), h, 2)
    order = np.argsort(T.real)
    err = float(np.max(np.abs(np.r_[c[order] - [2, 1], T[order] - [1, 3]])))
    return err < 1e-8, f"max param error {err:.2e}"


def _aging_floor():
    cfg = aging.AgingConfig(4, 10.0, 0.01, 10.0, 1.0)
    zero = aging.coverage_at(cfg, 0.0)
    err = abs(zero - math.exp(-0.1))
    return err < 1e-12, f"|P_cov(rho=0) - e^(-gth/gbar)| = {err:.2e}"


CHECKS = [
    ("mixture weights sum to 1", _mixture_weights),
    ("Psi2 pdf = finite-sum pdf", _dual_pdf),
    ("contour cdf = Marcum cdf", _dual_cdf),
    ("mgf(-1) = quadrature", _mgf_quadrature),
    ("mean = gamma_bar", _mean),
    ("sampler KS at 1%", _sampler_ks),
    ("outage / asymptote at 50 dB", _outage_asymptote),
    ("Rayleigh ergodic capacity", _rayleigh_capacity),
    ("Prony two-term recovery", _prony_synthetic),
    ("aging Rayleigh floor", _aging_floor),
]


def run_checks():
    """Run every check; returns ``(name, passed, detail)`` triples."""
    out = []
    for name, fn in CHECKS:
        try:
            ok, detail = fn()
        except Exception as exc:  # a crash is a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append((name, bool(ok), detail))
    return out
