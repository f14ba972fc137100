"""The fluctuating line-of-sight (fLoS) SNR distribution.

The received signal is ``S = w0 * xi * exp(j phi0) + sigma * G`` where
``xi**2`` is a scaled noncentral chi-square variable with ``2k`` degrees of
freedom, noncentrality ``2 lam`` and scale ``omega / 2``, and
``G ~ CN(0, 1)``. The SNR is ``gamma = gamma_bar * |S|**2``.

Internally most transforms are written in the normalised variable
``u = x / theta`` with ``theta = (sigma^2 + omega w0^2) gamma_bar``. In that
variable the Laplace image of the density is::

    (1 + A p)**(k-1) * exp(-lam B p / (1 + p)) / (1 + p)**k

which after the shift ``q = p + 1`` has the ``s^-c e^(d/s) (1 - d_i/s)^-b``
form handled by :mod:`flosfading.laplace`.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import special

from . import laplace
from .errors import DomainError, NotInteger
from .laplace import DEFAULT_CONTOUR, ContourSpec, TransformDescriptor
from .specfun import LogScaledReal, laguerre, log_iv, marcum_p

INTEGER_TOL = 1e-9
K_CAP = 1e6


@dataclass(frozen=True)
class FLoSParams:
    """Parameters of ``F_LoS(gamma_bar; K; k, lam, omega)``.

    ``omega`` defaults to ``1 / (k + lam)``, which makes ``gamma_bar`` the
    mean SNR. With any other ``omega`` the mean is given by :attr:`mean`.
    """

    gamma_bar: float
    K: float
    k: float
    lam: float = 0.0
    omega: float | None = None

    def __post_init__(self):
        if self.omega is None:
            if self.k + self.lam <= 0:
                raise DomainError("k + lam must be positive")
            object.__setattr__(self, "omega", 1.0 / (self.k + self.lam))
        vals = (self.gamma_bar, self.K, self.k, self.lam, self.omega)
        if not all(math.isfinite(v) for v in vals):
            raise DomainError(f"parameters must be finite: {vals}")
        if self.gamma_bar <= 0 or self.K < 0 or self.k <= 0 or self.lam < 0 or self.omega <= 0:
            raise DomainError(
                "need gamma_bar > 0, K >= 0, k > 0, lam >= 0, omega > 0; "
                f"got {vals}"
            )

    @property
    def omega0_sq(self) -> float:
        return self.K / (self.K + 1.0)

    @property
    def sigma_sq(self) -> float:
        return 1.0 / (self.K + 1.0)

    @property
    def _los(self) -> float:
        return self.omega * self.omega0_sq

    @property
    def A(self) -> float:
        return self.sigma_sq / (self.sigma_sq + self._los)

    @property
    def B(self) -> float:
        return self._los / (self.sigma_sq + self._los)

    @property
    def theta(self) -> float:
        """Scale ``(sigma^2 + omega w0^2) gamma_bar`` of the normalised variable."""
        return (self.sigma_sq + self._los) * self.gamma_bar

    @property
    def mean(self) -> float:
        return self.gamma_bar * (self.sigma_sq + self._los * (self.k + self.lam))

    @property
    def is_integer_k(self) -> bool:
        return self.k >= 1 - INTEGER_TOL and abs(self.k - round(self.k)) < INTEGER_TOL


@dataclass(frozen=True)
class KappaMuParams:
    gamma_bar: float
    kappa: float
    mu: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.gamma_bar, self.kappa, self.mu)):
            raise DomainError("kappa-mu parameters must be finite")
        if self.gamma_bar <= 0 or self.kappa < 0 or self.mu <= 0:
            raise DomainError(f"invalid kappa-mu parameters {self}")


@dataclass(frozen=True)
class MixtureComponent:
    weight: float
    component: KappaMuParams


def mgf(p: FLoSParams, s):
    """Moment generating function ``E[exp(s gamma)]``.

    Defined for ``s < 1 / theta``; complex ``s`` is accepted when its real
    part is in that region.
    """
    a = p.sigma_sq * p.gamma_bar
    b = p._los * p.gamma_bar
    if np.real(s) * (a + b) >= 1:
        raise DomainError(f"s={s} is outside the region of convergence s < {1 / (a + b)}")
    den = 1.0 - (a + b) * s
    return (1.0 - a * s) ** (p.k - 1) * np.exp(p.lam * b * s / den) / den ** p.k


def log_moment(p: FLoSParams, n: int) -> LogScaledReal:
    """Log-scaled ``E[gamma^n]``; all summands are positive."""
    if n < 0 or int(n) != n or n > 64:
        raise DomainError(f"moment order must be an integer in [0, 64], got {n}")
    n = int(n)
    if n == 0:
        return LogScaledReal(0.0, 1)
    if p._los == 0:
        return LogScaledReal(math.lgamma(n + 1) + n * math.log(p.sigma_sq * p.gamma_bar), 1)
    log_r = math.log(p._los / p.sigma_sq)
    logs = [
        math.lgamma(n + 1) - math.lgamma(i + 1) - math.lgamma(n - i + 1)
        + i * log_r
        + math.log(laguerre(i, p.k - 1.0, -p.lam))
        for i in range(n + 1)
    ]
    total = special.logsumexp(logs)
    return LogScaledReal(math.lgamma(n + 1) + n * math.log(p.sigma_sq * p.gamma_bar) + total, 1)


def moment(p: FLoSParams, n: int) -> float:
    """Raw moment ``E[gamma^n]`` (may overflow to ``inf`` for large ``n``)."""
    lm = log_moment(p, n)
    return math.exp(lm.log_magnitude) if lm.log_magnitude < 709.0 else math.inf


def _as_array(x):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        raise DomainError("x must be finite and non-negative")
    return x


def _scalar_or_array(out, x):
    return float(out) if np.ndim(x) == 0 else out


def pdf_psi2(p: FLoSParams, x, contour: ContourSpec = DEFAULT_CONTOUR):
    """Density through ``Psi2~(k; A lam, B x / (sigma^2 gamma_bar))`` (any real k)."""
    xs = _as_array(x)
    a = p.sigma_sq * p.gamma_bar
    log_front = p.k * math.log(p.A) - math.log(a) - p.lam
    out = np.empty(xs.shape)
    for idx, xv in np.ndenumerate(xs):
        xt = xv / a
        psi = laplace.psi2_tilde(p.k, p.A * p.lam, p.B * xt, contour)
        out[idx] = math.exp(log_front - xt + psi.log_magnitude)
    return _scalar_or_array(out, x)


def pdf_int_k(p: FLoSParams, x):
    """Finite Bessel-sum density for integer ``k``, evaluated in log scale."""
    if not p.is_integer_k:
        raise NotInteger(f"k={p.k} is not a positive integer")
    k = int(round(p.k))
    xs = _as_array(x)
    a = p.sigma_sq * p.gamma_bar
    A, B, lam = p.A, p.B, p.lam
    xt = np.atleast_1d(xs / a).astype(float)
    j = np.arange(k, dtype=float)[:, None]
    # (-1)^j (1-k)_j / j! = C(k-1, j) >= 0
    log_binom = (
        special.gammaln(k) - special.gammaln(j + 1) - special.gammaln(k - j)
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        if lam > 0 and B > 0:
            arg = 2.0 * np.sqrt(A * B * lam * xt)
            log_terms = log_binom + 0.5 * j * np.log(B * xt / (A * lam)) + log_iv(j, arg[None, :])
        else:
            # lam -> 0 limit: (B x~ / (A lam))^(j/2) I_j(2 sqrt(A B lam x~)) -> (B x~)^j / j!
            log_terms = log_binom + j * np.log(B * xt) - special.gammaln(j + 1)
        log_terms = np.where((j == 0) & np.isnan(log_terms), log_binom, log_terms)
        log_terms = np.where(np.isnan(log_terms), -np.inf, log_terms)
    log_sum = special.logsumexp(log_terms, axis=0)
    log_pdf = k * math.log(A) - math.log(a) - A * xt - B * lam + log_sum
    out = np.exp(log_pdf).reshape(xs.shape)
    return _scalar_or_array(out, x)


def pdf(p: FLoSParams, x, contour: ContourSpec = DEFAULT_CONTOUR):
    """Probability density of the SNR.

    Integer ``k`` (within 1e-9) uses the finite Bessel sum; otherwise the
    two-variable confluent hypergeometric form is inverted numerically.
    """
    if p.is_integer_k:
        return pdf_int_k(p, x)
    return pdf_psi2(p, x, contour)


def mixture_decompose(p: FLoSParams, prune: float = 0.0) -> list[MixtureComponent]:
    """Write the integer-``k`` density as a finite kappa-mu mixture.

    Component ``j`` (``0 <= j < k``) has ``mu = j + 1``,
    ``kappa = B lam / (j + 1)``, mean ``(B lam + j + 1) theta`` and weight
    ``C(k-1, j) B^j A^(k-1-j)``, so the weights sum to one.

    Args:
        p: Parameters with integral ``k``.
        prune: Drop components whose weight is below ``prune`` times the
            largest weight (0 keeps all ``k`` components).
    """
    if not p.is_integer_k:
        raise NotInteger(f"k={p.k} is not a positive integer")
    k = int(round(p.k))
    A, B = p.A, p.B
    j = np.arange(k, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_w = (
            special.gammaln(k) - special.gammaln(j + 1) - special.gammaln(k - j)
            + special.xlogy(j, B) + special.xlogy(k - 1 - j, A)
        )
    w = np.exp(log_w)
    keep = w >= prune * w.max()
    bl = B * p.lam
    return [
        MixtureComponent(
            float(w[i]),
            KappaMuParams(gamma_bar=(bl + i + 1) * p.theta, kappa=bl / (i + 1), mu=i + 1.0),
        )
        for i in np.nonzero(keep)[0]
    ]


def _log_ncx2_pdf(x, mu, scale, nc):
    """Log density of ``scale * chi'^2`` with half-dof ``mu`` and half-noncentrality ``nc``."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = x / scale
        if nc > 0:
            out = (
                -z - nc - math.log(scale)
                + 0.5 * (mu - 1) * (np.log(z) - math.log(nc))
                + log_iv(mu - 1, 2.0 * np.sqrt(nc * z))
            )
        else:
            out = special.xlogy(mu - 1, z) - z - math.log(scale) - special.gammaln(mu)
    return out


def kappa_mu_pdf(q: KappaMuParams, x):
    """Density of the kappa-mu fading power with mean ``q.gamma_bar``."""
    xs = _as_array(x)
    scale = q.gamma_bar / (q.mu * (1 + q.kappa))
    out = np.exp(_log_ncx2_pdf(xs, q.mu, scale, q.mu * q.kappa))
    if q.mu < 1:
        out = np.where(xs == 0, np.inf, out)
    return _scalar_or_array(out, x)


def kappa_mu_cdf(q: KappaMuParams, x):
    """``1 - Q_mu(sqrt(2 kappa mu), sqrt(2 mu (1 + kappa) x / gamma_bar))``."""
    xs = _as_array(x)
    b = np.sqrt(2 * q.mu * (1 + q.kappa) * xs / q.gamma_bar)
    out = np.asarray(marcum_p(q.mu, math.sqrt(2 * q.kappa * q.mu), b))
    return _scalar_or_array(out, x)


def cdf_descriptor(p: FLoSParams, T: complex = 0.0) -> tuple[TransformDescriptor, float]:
    """Descriptor and constant for ``int_0^x exp(-T s) f(s) ds`` in the variable ``u = x/theta``.

    Returns ``(desc, front)`` such that the integral equals
    ``front * original(desc)(x / theta)``.
    """
    tau = T * p.theta
    alpha = 1.0 + tau
    if isinstance(alpha, complex) and alpha.imag == 0:
        alpha = alpha.real
    desc = TransformDescriptor(
        c=2.0,
        d_exp=p.lam * p.B,
        factors=((1.0 - p.k, -p.B / p.A), (1.0, alpha)),
        shift=alpha,
    )
    return desc, math.exp((p.k - 1) * math.log(p.A) - p.lam * p.B)


def cdf_contour(p: FLoSParams, x, contour: ContourSpec = DEFAULT_CONTOUR):
    """CDF by Bromwich inversion of ``M(-s) / s``."""
    xs = _as_array(x)
    desc, front = cdf_descriptor(p)
    out = np.empty(xs.shape)
    for idx, xv in np.ndenumerate(xs):
        out[idx] = 0.0 if xv == 0 else front * laplace.invert(desc, contour, xv / p.theta)
    out = np.clip(out, 0.0, 1.0)
    return _scalar_or_array(out, x)


def cdf_mixture(p: FLoSParams, x):
    """CDF of the integer-``k`` kappa-mu mixture."""
    xs = _as_array(x)
    total = np.zeros(xs.shape)
    for comp in mixture_decompose(p, prune=1e-18):
        total = total + comp.weight * np.asarray(kappa_mu_cdf(comp.component, xs))
    return _scalar_or_array(np.clip(total, 0.0, 1.0), x)


def cdf(p: FLoSParams, x, contour: ContourSpec = DEFAULT_CONTOUR):
    """Cumulative distribution function of the SNR.

    Integer ``k`` goes through the kappa-mu mixture (generalised Marcum Q);
    other values through numerical inversion.
    """
    if p.is_integer_k:
        return cdf_mixture(p, x)
    return cdf_contour(p, x, contour)


# Table of classical special cases ------------------------------------------


@dataclass(frozen=True)
class OneSidedNormal:
    pass


@dataclass(frozen=True)
class NakagamiM:
    m: float


@dataclass(frozen=True)
class Rayleigh:
    pass


@dataclass(frozen=True)
class Rice:
    K: float


@dataclass(frozen=True)
class RicianShadowed:
    K: float
    m: float


@dataclass(frozen=True)
class Hoyt:
    q: float


def from_special(case, gamma_bar: float, cap: float = K_CAP) -> FLoSParams:
    """Map a classical fading model onto fLoS parameters.

    Rows whose ``K`` or ``k`` tends to infinity use ``cap`` instead and emit
    a ``UserWarning``; the relative error of the cap is ``O(1/cap)``.
    """
    def capped(what):
        warnings.warn(f"{what} -> infinity realised as {cap:g}", stacklevel=3)
        return cap

    match case:
        case OneSidedNormal():
            K, k = capped("K"), 0.5
        case NakagamiM(m=m):
            if not m >= 0.5:
                raise DomainError(f"Nakagami m must be >= 0.5, got {m}")
            K, k = capped("K"), float(m)
        case Rayleigh():
            K, k = 0.0, 1.0
        case Rice(K=K):
            if not K >= 0:
                raise DomainError(f"Rician K must be >= 0, got {K}")
            k = capped("k")
        case RicianShadowed(K=K, m=m):
            if not (K >= 0 and m >= 0.5):
                raise DomainError(f"need K >= 0 and m >= 0.5, got K={K}, m={m}")
            k = float(m)
        case Hoyt(q=q):
            if not 0 < q <= 1:
                raise DomainError(f"Hoyt q must lie in (0, 1], got {q}")
            K, k = (1 - q * q) / (2 * q * q), 0.5
        case _:
            raise DomainError(f"unknown special case {case!r}")
    return FLoSParams(gamma_bar=gamma_bar, K=float(K), k=k, lam=0.0)
