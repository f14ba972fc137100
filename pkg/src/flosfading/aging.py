"""MRT beamforming under channel aging.

With the true channel ``h = rho h_hat + sqrt(1 - rho^2) z`` and MRT along
the estimate ``h_hat``, the effective gain is complex Gaussian around
``rho ||h_hat||`` with variance ``1 - rho^2``. For a Rician estimate,
``||h_hat||^2`` is a scaled noncentral chi-square with ``N`` complex degrees
of freedom, so the SNR follows the fLoS law with ``K = rho^2 / (1 - rho^2)``,
``k = N``, ``lam = kappa N`` and ``Omega = 1 / (kappa + 1)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import special

from .errors import DomainError
from .flos import FLoSParams
from .laplace import DEFAULT_CONTOUR, ContourSpec
from .metrics import outage_probability
from .sampler import SeededStream, _blocked
from .specfun import marcum_p

J0_FIRST_ZERO = float(special.jn_zeros(0, 1)[0])


def jakes(fd_ts: float, n):
    """Jakes autocorrelation ``J0(2 pi fd_ts n)``."""
    return special.j0(2.0 * math.pi * fd_ts * np.asarray(n, dtype=float))


@dataclass(frozen=True)
class AgingConfig:
    """MISO aging scenario.

    Attributes:
        N: Transmit antennas.
        kappa_rice: Rician factor of the estimated channel (linear).
        fd_ts: Normalised Doppler shift.
        gamma_bar: Transmit SNR including path loss (linear).
        gamma_th: Outage threshold (linear).
        correlation: Optional ``(fd_ts, n) -> rho`` replacing the Jakes model.
    """

    N: int
    kappa_rice: float
    fd_ts: float
    gamma_bar: float
    gamma_th: float
    correlation: Callable | None = None

    def __post_init__(self):
        vals = (self.kappa_rice, self.fd_ts, self.gamma_bar, self.gamma_th)
        if not all(math.isfinite(v) for v in vals):
            raise DomainError("aging parameters must be finite")
        if int(self.N) != self.N or self.N < 1:
            raise DomainError(f"N must be a positive integer, got {self.N}")
        if self.kappa_rice < 0 or not 0 <= self.fd_ts < 0.5:
            raise DomainError("need kappa_rice >= 0 and 0 <= fd_ts < 0.5")
        if self.gamma_bar <= 0 or self.gamma_th <= 0:
            raise DomainError("gamma_bar and gamma_th must be positive")


def rho_at(cfg: AgingConfig, n) -> float:
    """Temporal correlation at lag ``n``."""
    if np.any(np.asarray(n) < 0):
        raise DomainError("time index must be non-negative")
    fn = cfg.correlation or jakes
    out = np.asarray(fn(cfg.fd_ts, n), dtype=float)
    return float(out) if out.ndim == 0 else out


def first_zero_index(cfg: AgingConfig) -> float:
    """Lag of the first zero of the Jakes correlation, ``j_{0,1} / (2 pi fd_ts)``."""
    if cfg.fd_ts == 0:
        return math.inf
    return J0_FIRST_ZERO / (2.0 * math.pi * cfg.fd_ts)


def aging_snr_params(rho: float, cfg: AgingConfig) -> FLoSParams:
    """fLoS parameters of the received SNR at correlation ``rho``."""
    r2 = rho * rho
    if not r2 < 1:
        raise DomainError(f"|rho| must be < 1, got {rho}; use the exact limit instead")
    return FLoSParams(
        gamma_bar=cfg.gamma_bar,
        K=r2 / (1.0 - r2),
        k=float(cfg.N),
        lam=cfg.kappa_rice * cfg.N,
        omega=1.0 / (cfg.kappa_rice + 1.0),
    )


def _perfect_csi_outage(cfg: AgingConfig) -> float:
    # rho = 1: gamma = gamma_bar ||h_hat||^2 exactly
    omega = 1.0 / (cfg.kappa_rice + 1.0)
    b = math.sqrt(2.0 * cfg.gamma_th / (cfg.gamma_bar * omega))
    return float(marcum_p(cfg.N, math.sqrt(2.0 * cfg.kappa_rice * cfg.N), b))


def coverage_at(cfg: AgingConfig, rho: float, contour: ContourSpec = DEFAULT_CONTOUR) -> float:
    if rho * rho >= 1.0 - 1e-15:
        return 1.0 - _perfect_csi_outage(cfg)
    p = aging_snr_params(rho, cfg)
    return 1.0 - float(outage_probability(p, cfg.gamma_th, contour))


def coverage_vs_time(cfg: AgingConfig, n_max: int, contour: ContourSpec = DEFAULT_CONTOUR):
    """Coverage probability for ``n = 0..n_max``.

    Returns:
        Arrays ``(n, p_cov)``.
    """
    if n_max < 1:
        raise DomainError("n_max must be >= 1")
    n = np.arange(int(n_max) + 1)
    rho = np.atleast_1d(rho_at(cfg, n))
    return n, np.array([coverage_at(cfg, r, contour) for r in rho])


def _mrt_block(rng: np.random.Generator, size: int, cfg: AgingConfig, rho: float):
    N, kappa = cfg.N, cfg.kappa_rice

    def cn(var):
        return np.sqrt(var / 2.0) * (rng.standard_normal((size, N)) + 1j * rng.standard_normal((size, N)))

    h_hat = math.sqrt(kappa / (kappa + 1.0)) + cn(1.0 / (kappa + 1.0))
    h = rho * h_hat + math.sqrt(max(1.0 - rho * rho, 0.0)) * cn(1.0)
    w = h_hat / np.linalg.norm(h_hat, axis=1, keepdims=True)
    gain = np.abs(np.sum(np.conj(w) * h, axis=1)) ** 2
    return cfg.gamma_bar * gain


def simulate_mrt_snr(cfg: AgingConfig, rho: float, stream: SeededStream, size: int, workers=None):
    """Monte Carlo SNR of MRT with an aged Rician estimate (all-ones LoS)."""
    return _blocked(lambda g, m: _mrt_block(g, m, cfg, rho), stream, size, workers)


def simulate_coverage(cfg: AgingConfig, rho: float, stream: SeededStream, size: int = 1_000_000):
    """Simulated coverage and its standard error."""
    snr = simulate_mrt_snr(cfg, rho, stream, size)
    p = float(np.mean(snr >= cfg.gamma_th))
    return p, math.sqrt(max(p * (1.0 - p), 1e-300) / size)
