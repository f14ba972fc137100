"""Monte Carlo draws from the physical fLoS model and empirical estimators.

Draws are produced in fixed-size blocks. Block ``i`` of a stream always
comes from a Philox generator keyed by ``(seed, stream_id)`` with the block
index in the high counter word, so the sequence of draws does not depend on
how blocks are distributed over workers.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError
from .flos import FLoSParams

BLOCK = 1 << 16
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class SeededStream:
    """Reproducible counter-based random stream."""

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for v in (self.seed, self.stream_id):
            if not 0 <= v <= _MASK64:
                raise DomainError("seed and stream_id must be unsigned 64-bit integers")

    def generator(self, block: int = 0) -> np.random.Generator:
        """Generator for block ``block``; blocks never overlap."""
        bitgen = np.random.Philox(key=[self.seed, self.stream_id], counter=[0, 0, 0, block])
        return np.random.Generator(bitgen)

    def substream(self, stream_id: int) -> "SeededStream":
        return SeededStream(self.seed, stream_id)


def _threads(workers: int | None) -> int:
    if workers is not None:
        return max(1, workers)
    return max(1, int(os.environ.get("FLOS_THREADS", "1")))


def _blocked(draw_block: Callable[[np.random.Generator, int], np.ndarray], stream, size, workers):
    if size is None:
        return float(draw_block(stream.generator(0), 1)[0])
    size = int(size)
    sizes = [min(BLOCK, size - start) for start in range(0, size, BLOCK)]
    jobs = [(stream.generator(i), n) for i, n in enumerate(sizes)]
    n_workers = _threads(workers)
    if n_workers == 1 or len(jobs) == 1:
        parts = [draw_block(g, n) for g, n in jobs]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            parts = list(pool.map(lambda job: draw_block(*job), jobs))
    return np.concatenate(parts) if parts else np.empty(0)


def _ncx2_block(rng: np.random.Generator, n: int, k: float, lam: float, omega: float):
    shape = k + (rng.poisson(lam, n) if lam > 0 else 0.0)
    return rng.gamma(shape, omega, n)


def sample_ncx2(k: float, lam: float, omega: float, stream: SeededStream, size=None, workers=None):
    """Draw ``xi^2`` with ``P ~ Poisson(lam)`` then ``Gamma(k + P, omega)``."""
    if not (k > 0 and lam >= 0 and omega > 0):
        raise DomainError(f"invalid noncentral chi-square parameters ({k}, {lam}, {omega})")
    return _blocked(lambda g, n: _ncx2_block(g, n, k, lam, omega), stream, size, workers)


def _snr_block(rng, n, p: FLoSParams, fixed_phase: bool):
    xi = np.sqrt(_ncx2_block(rng, n, p.k, p.lam, p.omega))
    phi = np.zeros(n) if fixed_phase else rng.uniform(0.0, 2 * np.pi, n)
    g = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2.0)
    s = np.sqrt(p.omega0_sq) * xi * np.exp(1j * phi) + np.sqrt(p.sigma_sq) * g
    return p.gamma_bar * np.abs(s) ** 2


def sample_snr(p: FLoSParams, stream: SeededStream, size=None, *, fixed_phase=False, workers=None):
    """SNR draws ``gamma_bar |w0 xi e^{j phi0} + sigma G|^2``.

    Args:
        p: Distribution parameters.
        stream: Random stream.
        size: Number of draws; ``None`` returns one float.
        fixed_phase: Pin ``phi0 = 0`` (the distribution does not change).
        workers: Thread count; defaults to ``FLOS_THREADS`` or 1.
    """
    return _blocked(lambda g, n: _snr_block(g, n, p, fixed_phase), stream, size, workers)


def empirical_cdf(draws) -> Callable:
    """Right-continuous empirical CDF of ``draws``."""
    data = np.sort(np.asarray(draws, dtype=float))
    n = data.size

    def F(x):
        return np.searchsorted(data, x, side="right") / n

    return F


def ks_statistic(draws, cdf: Callable) -> float:
    """Sup-norm distance between the empirical CDF and vectorised ``cdf``."""
    data = np.sort(np.asarray(draws, dtype=float))
    n = data.size
    F = np.asarray(cdf(data), dtype=float)
    upper = np.arange(1, n + 1) / n - F
    lower = F - np.arange(n) / n
    return float(max(upper.max(), lower.max()))


def histogram(draws, edges) -> np.ndarray:
    counts, _ = np.histogram(np.asarray(draws, dtype=float), bins=np.asarray(edges, dtype=float))
    return counts
