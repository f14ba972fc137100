"""Bromwich inversion for a family of Laplace images and the confluent
hypergeometric functions built on it.

The images handled here have the form::

    G(s) = s**(-c) * exp(d_exp / s) * prod_i (1 - d_i / s)**(-b_i)

and the physical original is ``exp(-shift * t) * g(t)`` with ``g`` the
inverse transform of ``G``. The inversion is a trapezoidal rule on the
vertical line ``Re s = L`` truncated at ``|Im s| = T``.

Three things keep the quadrature accurate in double precision:

* The slowly decaying tail of ``G`` is removed before integrating. ``G`` is
  expanded in powers of ``w = 1/(s + beta)``, with the pole ``-beta`` placed
  well to the left of every singularity. Each subtracted term has the
  closed-form original ``exp(-beta t) t**(c+j-1) / Gamma(c+j)``, so the
  truncation at ``T`` only sees an ``O(|s|**-(c+J))`` remainder.
* The frequency variable is rescaled so that the singular set of ``G`` has
  radius ``T/440``; the subtraction series then converges quickly on
  ``|s| >= T``.
* The abscissa margin shrinks like ``1/t`` for large ``t`` and the node
  spacing is set from the aliasing (Poisson summation) bound, so the
  ``exp(L t)`` growth of the integrand never swamps the result.

Every evaluation compares the full trapezoid sum against the sum over every
other node. Sums use ``numpy.sum`` on a fixed-length array, whose pairwise
summation tree depends only on the array length, so results are
reproducible bit for bit.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import ContourTooShort, DomainError, NoConvergence
from .specfun import LogScaledReal

_RADIUS_FRACTION = 440.0  # singular-set radius after rescaling is T / 440
_POLE_OFFSET = 10.0  # subtraction pole sits this many radii left of centre
_ALIAS_EXPONENT = 50.0  # coarse-grid aliasing exp(-margin * period / 2) stays near 1e-11
_MAX_TERMS = 40


@dataclass(frozen=True)
class TransformDescriptor:
    """Laplace image ``s^-c e^(d_exp/s) prod (1 - d_i/s)^-b_i``.

    Attributes:
        c: Power of ``1/s``; must be positive.
        d_exp: Coefficient of the essential singularity ``exp(d_exp/s)``.
        factors: Pairs ``(b_i, d_i)``.
        shift: Frequency shift ``alpha``; the original is
            ``exp(-alpha t) * inverse(t)``.
    """

    c: float
    d_exp: complex = 0.0
    factors: tuple[tuple[float, complex], ...] = field(default_factory=tuple)
    shift: complex = 0.0

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple((float(b), d) for b, d in self.factors))
        values = [self.c, self.d_exp, self.shift]
        for b, d in self.factors:
            values += [b, d]
        if not all(cmath.isfinite(complex(v)) for v in values):
            raise DomainError("transform descriptor fields must be finite")
        if not self.c > 0:
            raise DomainError(f"c must be positive, got {self.c}")

    @property
    def is_real(self) -> bool:
        vals = [self.d_exp, self.shift] + [d for _, d in self.factors]
        return all(complex(v).imag == 0 for v in vals)

    def active_factors(self) -> list[tuple[float, complex]]:
        return [(b, complex(d)) for b, d in self.factors if b != 0 and d != 0]

    def __call__(self, s):
        """Evaluate ``G(s)`` (without the shift) at complex ``s``."""
        s = np.asarray(s, dtype=complex)
        log_g = -self.c * np.log(s) + self.d_exp / s
        for b, d in self.active_factors():
            log_g -= b * np.log1p(-d / s)
        return np.exp(log_g)

    def scaled(self, factor: float) -> "TransformDescriptor":
        """Descriptor of ``G(factor * s)`` up to the constant ``factor**-c``."""
        return TransformDescriptor(
            self.c,
            self.d_exp / factor,
            tuple((b, d / factor) for b, d in self.factors),
            self.shift / factor,
        )


@dataclass(frozen=True)
class ContourSpec:
    """Bromwich contour settings.

    Attributes:
        epsilon: Largest margin between the abscissa and the rightmost
            singularity. The margin is reduced for large ``t``.
        T: Half-height of the truncated line, in rescaled units.
        nodes: Minimum number of trapezoid intervals on the half line.
        max_doublings: Node doublings tried before giving up.
        rtol: Relative tolerance of the every-other-node self-check.
    """

    epsilon: float = 0.5
    T: float = 1e3
    nodes: int = 20_000
    max_doublings: int = 3
    rtol: float = 1e-10

    def __post_init__(self):
        if not (self.epsilon > 0 and self.T > 0 and self.nodes > 0):
            raise DomainError("contour epsilon, T and nodes must be positive")

    def abscissa(self, desc: TransformDescriptor) -> float:
        """``L = max(Re d_i, 0) + epsilon`` for the unscaled descriptor."""
        return max([0.0] + [complex(d).real for _, d in desc.active_factors()]) + self.epsilon


DEFAULT_CONTOUR = ContourSpec()


@dataclass(frozen=True)
class Inversion:
    """Result of one Bromwich inversion with its diagnostics."""

    value: complex
    imag_residual: float
    tail_estimate: float
    self_check: float
    nodes: int
    abscissa: float
    scale: float


def _series_coefficients(desc: TransformDescriptor, beta: complex, n_terms: int) -> np.ndarray:
    """Coefficients ``e_j`` of ``G(s) = w^c sum_j e_j w^j`` with ``w = 1/(s+beta)``."""
    c = desc.c
    facs = desc.active_factors()
    sum_b = sum(b for b, _ in facs)
    m = np.arange(1, n_terms + 1)
    with np.errstate(over="ignore", invalid="ignore"):
        ell = (c - sum_b) * beta ** m / m + desc.d_exp * beta ** (m - 1)
        for b, d in facs:
            ell = ell + b * (beta + d) ** m / m
    e = np.zeros(n_terms + 1, dtype=complex)
    e[0] = 1.0
    # exp of a power series: j e_j = sum_{m=1}^{j} m ell_m e_{j-m}
    for j in range(1, n_terms + 1):
        e[j] = np.dot(m[:j] * ell[:j], e[j - 1 :: -1][:j]) / j
    return e


def _singular_geometry(desc: TransformDescriptor) -> tuple[complex, float]:
    pts = [0j] + [d for _, d in desc.active_factors()]
    re = [p.real for p in pts]
    im = [p.imag for p in pts]
    centre = complex(0.5 * (min(re) + max(re)), 0.5 * (min(im) + max(im)))
    radius = max(abs(p - centre) for p in pts)
    radius = max(radius, abs(desc.d_exp) / _POLE_OFFSET)
    return centre, radius


def bromwich(
    desc: TransformDescriptor,
    contour: ContourSpec,
    t: float,
    *,
    symmetric: bool | None = None,
) -> Inversion:
    """Invert ``desc`` at ``t > 0`` and return the value with diagnostics.

    Args:
        desc: The Laplace image.
        contour: Contour settings.
        t: Time (or SNR) argument.
        symmetric: Integrate only the upper half line using conjugate
            symmetry. Defaults to True for real descriptors; must be False
            for complex ones.
    """
    if not (math.isfinite(t) and t > 0):
        raise DomainError(f"t must be positive and finite, got {t}")
    if symmetric is None:
        symmetric = desc.is_real
    if symmetric and not desc.is_real:
        raise DomainError("conjugate symmetry requires a real descriptor")

    alpha = complex(desc.shift)
    if not desc.active_factors() and desc.d_exp == 0:
        val = cmath.exp((desc.c - 1) * math.log(t) - math.lgamma(desc.c) - alpha * t)
        return Inversion(val, 0.0, 0.0, 0.0, 0, 0.0, 1.0)

    centre, radius = _singular_geometry(desc)
    target = contour.T / _RADIUS_FRACTION
    # a near-empty singular set would give a degenerate scale; 1/t keeps t' of order one
    scale = max(radius, 1.0 / t) / target
    sdesc = desc.scaled(scale)
    ts = t * scale
    alpha_s = alpha / scale
    centre_s = centre / scale
    beta = -centre_s + _POLE_OFFSET * target
    facs = sdesc.active_factors()

    # balance exp(L t) against exp(d_exp / L); never let L approach T
    margin = max(min(contour.epsilon, 8.0 / ts), math.sqrt(abs(sdesc.d_exp) / ts))
    margin = min(margin, contour.T / 40.0)
    L = max([0.0] + [d.real for _, d in facs]) + margin
    T = contour.T

    coef = _series_coefficients(sdesc, beta, _MAX_TERMS)
    mags = np.abs(coef) * T ** (-np.arange(_MAX_TERMS + 1, dtype=float))
    # keep every term up to the last one that matters; a single coefficient
    # can pass through zero while later ones are still significant
    big = np.nonzero(mags[1:] >= 1e-18 * max(1.0, mags[0]))[0]
    n_sub = min(int(big[-1]) + 2, _MAX_TERMS) if big.size else 1
    e_sub = coef[:n_sub]

    period = max(_ALIAS_EXPONENT / margin, 2.0 * ts)
    n = max(int(math.ceil(T * period / (2 * math.pi))), contour.nodes)
    n += n % 2

    log_front = (L - alpha_s.real) * ts
    j = np.arange(n_sub)
    log_t = math.log(ts)
    analytic_logs = (desc.c + j - 1) * log_t - np.array([math.lgamma(desc.c + k) for k in j])
    analytic = np.sum(e_sub * np.exp(analytic_logs - (beta + alpha_s) * ts))

    for attempt in range(contour.max_doublings + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            dy = T / n
            y = dy * np.arange(n + 1)
            if not symmetric:
                y = np.concatenate([-y[:0:-1], y])
            s = L + 1j * y
            w = 1.0 / (s + beta)
            tail_sum = np.polyval(e_sub[::-1], w) * np.exp(desc.c * np.log(w))
            remainder = sdesc(s) - tail_sum
            h = remainder * np.exp(1j * y * ts)
            weights = np.ones(h.size)
            weights[0] = weights[-1] = 0.5
            fine = np.sum(weights * h)
            wc = np.ones(h[::2].size)
            wc[0] = wc[-1] = 0.5
            coarse = 2.0 * np.sum(wc * h[::2])
            absolute = np.sum(weights * np.abs(remainder))
            if symmetric:
                fine_v, coarse_v = fine.real * dy / math.pi, coarse.real * dy / math.pi
                abs_v = absolute * dy / math.pi
                imag = 0.0
            else:
                fine_v, coarse_v = fine * dy / (2 * math.pi), coarse * dy / (2 * math.pi)
                abs_v = absolute * dy / (2 * math.pi)
                imag = fine_v.imag
            front = cmath.exp(complex(log_front, -alpha_s.imag * ts)) if not desc.is_real else math.exp(log_front)
            value = front * fine_v + analytic
            delta = abs(front * (fine_v - coarse_v))
            floor = 1e-14 * abs(front) * abs_v + 1e-300
            if np.isfinite(value) and delta <= contour.rtol * abs(value) + floor:
                break
            n *= 2
    else:
        raise ContourTooShort(
            f"self-check failed at t={t}: |fine-coarse|={delta:.3e}, value={abs(value):.3e}"
        )

    tail = abs(front) * abs(coef[n_sub]) * T ** (1 - desc.c - n_sub) / (desc.c + n_sub - 1) / math.pi
    factor = scale ** (1 - desc.c)
    value = value * factor
    if desc.is_real and not symmetric:
        imag_res = abs(imag * front * factor)
        if imag_res > 1e-8 * abs(value.real) + floor * factor:
            raise ContourTooShort(f"imaginary residual {imag_res:.3e} at t={t}")
    else:
        imag_res = 0.0
    return Inversion(
        value=complex(value),
        imag_residual=float(imag_res),
        tail_estimate=float(tail * factor),
        self_check=float(delta * factor),
        nodes=n,
        abscissa=L * scale,
        scale=scale,
    )


def invert(desc: TransformDescriptor, contour: ContourSpec, t: float):
    """Original of ``desc`` at ``t``: a float for real descriptors, else complex."""
    res = bromwich(desc, contour, t)
    return res.value.real if desc.is_real else res.value


def phi3n(
    b: Sequence[float],
    c: float,
    d: Sequence[float],
    t: float,
    contour: ContourSpec = DEFAULT_CONTOUR,
) -> float:
    """n-variate confluent hypergeometric ``Phi_3^(n)(b; c; d_1 t, ..., d_n t)``.

    Uses the Laplace pair
    ``L{t^(c-1) Phi_3^(n) / Gamma(c)} = s^-c e^(d_n/s) prod (1 - d_i/s)^-b_i``.
    """
    b = list(b)
    d = list(d)
    if len(d) < 2 or len(b) != len(d) - 1:
        raise DomainError("phi3n needs n >= 2 arguments and n-1 numerator parameters")
    if t < 0:
        raise DomainError(f"t must be non-negative, got {t}")
    if t == 0 or all(x == 0 for x in d):
        return 1.0
    desc = TransformDescriptor(c, d[-1], tuple(zip(b, d[:-1])))
    return math.gamma(c) * t ** (1.0 - c) * invert(desc, contour, t)


def psi2_tilde(
    a: float, w: float, z: float, contour: ContourSpec = DEFAULT_CONTOUR
) -> LogScaledReal:
    """``Psi_2(a; 1, a; z, w)`` as ``exp(z + w) Phi_3(1 - a; 1; -z, z w)``."""
    if not all(math.isfinite(v) for v in (a, w, z)):
        raise DomainError("psi2_tilde arguments must be finite")
    if w < 0 or z < 0:
        raise DomainError(f"psi2_tilde needs w, z >= 0, got ({w}, {z})")
    phi = phi3n([1.0 - a], 1.0, [-z, z * w], 1.0, contour)
    if not phi > 0:
        raise NoConvergence(f"Phi3 evaluated to {phi} for a={a}, w={w}, z={z}")
    return LogScaledReal(z + w + math.log(phi), 1)


def _hyp0f1(c: float, y: float, tol: float) -> float:
    term = 1.0
    terms = [1.0]
    for n in range(1, 100_000):
        term *= y / ((c + n - 1) * n)
        terms.append(term)
        if abs(term) < tol * abs(math.fsum(terms)) and n > abs(y):
            return math.fsum(terms)
    raise NoConvergence("0F1 series did not converge")


def series_phi3(b: float, c: float, x: float, y: float, tol: float = 1e-15) -> float:
    """Double power series of ``Phi_3(b; c; x, y)``; independent oracle.

    ``sum_m (b)_m x^m / ((c)_m m!) * 0F1(; c + m; y)``.
    """
    if abs(x) > 50 or abs(y) > 50:
        raise DomainError("series_phi3 is limited to |x|, |y| <= 50")
    outer = 1.0
    terms = [_hyp0f1(c, y, tol)]
    quiet = 0
    for m in range(1, 100_000):
        outer *= (b + m - 1) * x / ((c + m - 1) * m)
        if outer == 0:
            return math.fsum(terms)
        term = outer * _hyp0f1(c + m, y, tol)
        terms.append(term)
        if abs(term) < tol * abs(math.fsum(terms)) and m > abs(x) + abs(b):
            quiet += 1
            if quiet >= 3:
                return math.fsum(terms)
        else:
            quiet = 0
    raise NoConvergence("Phi3 double series did not converge")
