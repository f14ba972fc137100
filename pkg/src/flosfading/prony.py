"""Piecewise exponential-sum approximation by least-squares Prony fits.

On each segment ``[l, u]`` the samples ``f(l + n h)``, ``n = 0..L``, are
modelled as ``sum_k c_k exp(-T_k x)``. The linear-prediction coefficients
come from an SVD-truncated solve of the Hankel system; the roots of the
prediction polynomial give ``z_k = exp(-T_k h)`` and the amplitudes follow
from a Vandermonde least-squares solve.

Smooth targets such as ``ln(1 + x)`` make the Hankel matrix numerically
rank deficient, so ``fit_log1p`` retries each segment with the detected
rank as the new term count.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, IllConditioned, NoConvergence

RCOND = 1e-12
DEFAULT_TOL = 1e-4
VALIDATION_FACTOR = 10


@dataclass(frozen=True)
class Segment:
    """Fit interval ``[l, u]`` sampled at ``L + 1`` points for ``M`` terms."""

    l: float
    u: float
    M: int
    L: int

    def __post_init__(self):
        if not (math.isfinite(self.l) and math.isfinite(self.u) and 0 <= self.l < self.u):
            raise DomainError(f"segment needs 0 <= l < u, got [{self.l}, {self.u}]")
        if self.M < 1 or self.L < 4 * self.M:
            raise DomainError(f"segment needs M >= 1 and L >= 4M, got M={self.M}, L={self.L}")

    @property
    def h(self) -> float:
        return (self.u - self.l) / self.L

    def grid(self, factor: int = 1) -> np.ndarray:
        return self.l + (self.u - self.l) * np.arange(self.L * factor + 1) / (self.L * factor)


@dataclass(frozen=True)
class SegmentFit:
    """Terms fitted on one segment, with absolute-``x`` amplitudes."""

    segment: Segment
    c: np.ndarray
    T: np.ndarray
    error: float
    train_error: float = 0.0
    growing: int = 0

    def eval(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        # evaluate relative to l so that large l does not overflow exp(-T x)
        shift = self.c * np.exp(-self.T * self.segment.l)
        return (shift * np.exp(-np.multiply.outer(x - self.segment.l, self.T))).sum(-1).real


def prony_fit(samples, h: float, M: int, origin: float = 0.0, rcond: float = RCOND):
    """Fit ``M`` exponentials to uniformly spaced samples.

    Args:
        samples: Values at ``origin + n h`` for ``n = 0..L``.
        h: Grid step.
        M: Number of terms.
        origin: Abscissa of the first sample; amplitudes are returned for
            absolute ``x``.
        rcond: Relative singular-value cutoff for the Hankel solve.

    Returns:
        Complex arrays ``(c, T)`` with ``f(x) ~ sum c exp(-T x)``.

    Raises:
        IllConditioned: The truncated Hankel rank is below ``M``. The
            detected rank is stored on the exception as ``rank``.
    """
    y = np.asarray(samples, dtype=float)
    L = y.size - 1
    if not np.all(np.isfinite(y)):
        raise DomainError("samples must be finite")
    if M < 1 or L < 4 * M:
        raise DomainError(f"need L >= 4M, got L={L}, M={M}")
    hankel = np.lib.stride_tricks.sliding_window_view(y, M)[: L + 1 - M]
    a, _, rank, _ = np.linalg.lstsq(hankel, -y[M:], rcond=rcond)
    if rank < M:
        err = IllConditioned(f"Hankel rank {rank} < {M}")
        err.rank = int(rank)
        raise err
    z = np.roots(np.r_[1.0, a[::-1]]).astype(complex)
    vander = np.power.outer(z, np.arange(L + 1)).T
    c_rel = np.linalg.lstsq(vander, y.astype(complex), rcond=None)[0]
    T = -np.log(z) / h
    return c_rel * np.exp(T * origin), T


def _fit_segment(func: Callable, seg: Segment, rcond: float) -> SegmentFit:
    y = func(seg.grid())
    M = seg.M
    while True:
        try:
            c, T = prony_fit(y, seg.h, M, origin=seg.l, rcond=rcond)
            break
        except IllConditioned as exc:
            if exc.rank < 1:
                raise
            M = exc.rank
    fit = SegmentFit(seg, c, T, 0.0)
    dense = seg.grid(VALIDATION_FACTOR)
    error = float(np.max(np.abs(fit.eval(dense) - func(dense))))
    train = float(np.max(np.abs(fit.eval(seg.grid()) - y)))
    growing = int(np.sum(T.real < 0))
    return SegmentFit(Segment(seg.l, seg.u, M, seg.L), c, T, error, train, growing)


@dataclass(frozen=True)
class ExpSumFit:
    """Piecewise exponential sum over contiguous segments."""

    fits: tuple[SegmentFit, ...] = field(default_factory=tuple)

    @property
    def lower(self) -> float:
        return self.fits[0].segment.l

    @property
    def upper(self) -> float:
        return self.fits[-1].segment.u

    @property
    def sup_error(self) -> float:
        return max(f.error for f in self.fits)

    def terms(self):
        """Yield ``(l, u, c, T)`` per segment with absolute-``x`` amplitudes."""
        for f in self.fits:
            yield f.segment.l, f.segment.u, f.c, f.T

    def eval(self, x):
        """Real part of the exponential sum of the segment containing ``x``."""
        xs = np.asarray(x, dtype=float)
        if np.any(xs < self.lower) or np.any(xs > self.upper) or not np.all(np.isfinite(xs)):
            raise DomainError(f"x outside fitted range [{self.lower}, {self.upper}]")
        uppers = np.array([f.segment.u for f in self.fits])
        which = np.minimum(np.searchsorted(uppers, xs, side="left"), len(self.fits) - 1)
        out = np.empty(xs.shape)
        for i, f in enumerate(self.fits):
            mask = which == i
            if np.any(mask):
                out[mask] = f.eval(xs[mask])
        return float(out) if out.ndim == 0 else out

    def to_json(self) -> str:
        segs = []
        for f in self.fits:
            s = f.segment
            segs.append({
                "l": s.l, "u": s.u, "M": s.M, "L": s.L,
                "error": f.error, "train_error": f.train_error, "growing": f.growing,
                "c": [[v.real, v.imag] for v in f.c],
                "T": [[v.real, v.imag] for v in f.T],
            })
        return json.dumps({"segments": segs}, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ExpSumFit":
        fits = []
        for d in json.loads(text)["segments"]:
            c = np.array([complex(*v) for v in d["c"]])
            T = np.array([complex(*v) for v in d["T"]])
            seg = Segment(d["l"], d["u"], d["M"], d["L"])
            fits.append(SegmentFit(seg, c, T, d["error"], d.get("train_error", 0.0), d.get("growing", 0)))
        return cls(tuple(fits))


def default_segmentation(x_max: float = 1024.0, M: int = 12, L: int = 256) -> list[Segment]:
    """``[0, 1]`` followed by doubling segments up to at least ``x_max``."""
    if not x_max > 0:
        raise DomainError(f"x_max must be positive, got {x_max}")
    edges = [0.0, 1.0]
    while edges[-1] < x_max:
        edges.append(2.0 * edges[-1])
    return [Segment(a, b, M, L) for a, b in zip(edges[:-1], edges[1:])]


def fit_log1p(
    segmentation: list[Segment] | None = None,
    tol: float = DEFAULT_TOL,
    rcond: float = RCOND,
) -> ExpSumFit:
    """Fit ``ln(1 + x)`` segment by segment.

    Raises:
        DomainError: Segments are not ordered and contiguous from 0.
        NoConvergence: A segment's validation error exceeds ``tol``.
    """
    segs = default_segmentation() if segmentation is None else list(segmentation)
    if not segs or segs[0].l != 0:
        raise DomainError("segmentation must start at 0")
    for a, b in zip(segs[:-1], segs[1:]):
        if a.u != b.l:
            raise DomainError(f"segments [{a.l}, {a.u}] and [{b.l}, {b.u}] are not contiguous")
    fits = tuple(_fit_segment(np.log1p, s, rcond) for s in segs)
    worst = max(fits, key=lambda f: f.error)
    if worst.error > tol:
        s = worst.segment
        raise NoConvergence(f"fit error {worst.error:.3g} on [{s.l}, {s.u}] exceeds {tol}")
    return ExpSumFit(fits)
