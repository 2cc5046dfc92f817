"""Gray-mapped square and rectangular QAM with unit average symbol energy.

Bit labels are per-axis reflected Gray codes. For ``q`` bits per symbol the
in-phase axis carries ``ceil(q/2)`` bits (``J = 2**((q+1)//2)`` levels) and the
quadrature axis the remaining ``floor(q/2)`` bits (``I`` levels). The label of
a symbol is the integer ``(gray_inphase << bits_quadrature) | gray_quadrature``
and ``points[label]`` is its constellation point, so label order and point
order coincide.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

__all__ = [
    "Constellation",
    "build_constellation",
    "modulate",
    "demodulate",
    "slice_labels",
    "labels_to_bits",
    "bits_to_labels",
    "gray_code",
]

MAX_BITS = 10


def gray_code(n: int) -> np.ndarray:
    """Reflected binary Gray code of ``0..n-1``."""
    j = np.arange(n, dtype=np.int64)
    return j ^ (j >> 1)


@dataclass(frozen=True, eq=False)
class Constellation:
    q: int
    m: int
    n_inphase: int
    n_quadrature: int
    scale: float
    points: np.ndarray = field(repr=False)
    labels: np.ndarray = field(repr=False)
    # per-axis lookup tables shared with the compiled kernel
    gray_inphase: np.ndarray = field(repr=False)
    gray_quadrature: np.ndarray = field(repr=False)
    tie_up_inphase: np.ndarray = field(repr=False)
    tie_up_quadrature: np.ndarray = field(repr=False)

    @property
    def bits_quadrature(self) -> int:
        return self.q // 2

    @property
    def dims(self) -> tuple[int, int]:
        """``(I, J)``: quadrature and in-phase level counts."""
        return self.n_quadrature, self.n_inphase


def _axis_levels(n: int) -> np.ndarray:
    return 2.0 * np.arange(n) - (n - 1)


def _tie_up(gray: np.ndarray) -> np.ndarray:
    # at a midpoint between levels j and j+1, move up when j+1 has the lower code
    up = np.zeros(len(gray), dtype=np.uint8)
    up[:-1] = gray[1:] < gray[:-1]
    return up


@lru_cache(maxsize=None)
def build_constellation(q: int) -> Constellation:
    """Gray-labelled ``2**q``-QAM; ``q=1`` gives BPSK on the real axis."""
    if not 1 <= q <= MAX_BITS:
        raise ValueError(f"q must be in 1..{MAX_BITS}, got {q!r}")
    n_i = 2 ** ((q + 1) // 2)
    n_q = 2 ** (q // 2)
    b_q = q // 2
    scale = float(np.sqrt(3.0 / (n_i * n_i + n_q * n_q - 2)))
    g_i = gray_code(n_i)
    g_q = gray_code(n_q)
    li, lq = np.meshgrid(np.arange(n_i), np.arange(n_q), indexing="ij")
    labels_grid = (g_i[li] << b_q) | g_q[lq]
    pts_grid = scale * (_axis_levels(n_i)[li] + 1j * _axis_levels(n_q)[lq])
    m = 2**q
    points = np.empty(m, dtype=np.complex128)
    points[labels_grid.ravel()] = pts_grid.ravel()
    # q == 1: quadrature coordinate is 0.0, keep it exactly zero
    if n_q == 1:
        points = points.real + 0j
    for arr in (points, g_i, g_q):
        arr.setflags(write=False)
    return Constellation(
        q=q,
        m=m,
        n_inphase=n_i,
        n_quadrature=n_q,
        scale=scale,
        points=points,
        labels=np.arange(m, dtype=np.int64),
        gray_inphase=g_i,
        gray_quadrature=g_q,
        tie_up_inphase=_tie_up(g_i),
        tie_up_quadrature=_tie_up(g_q),
    )


def bits_to_labels(bits: np.ndarray, q: int) -> np.ndarray:
    bits = np.asarray(bits)
    if bits.shape[-1] % q:
        raise ValueError(f"bit length {bits.shape[-1]} is not a multiple of q={q}")
    grouped = bits.reshape(*bits.shape[:-1], -1, q).astype(np.int64)
    weights = 1 << np.arange(q - 1, -1, -1, dtype=np.int64)
    return grouped @ weights


def labels_to_bits(labels: np.ndarray, q: int) -> np.ndarray:
    labels = np.atleast_1d(np.asarray(labels, dtype=np.int64))
    shifts = np.arange(q - 1, -1, -1, dtype=np.int64)
    bits = (labels[..., None] >> shifts) & 1
    return bits.reshape(*labels.shape[:-1], -1).astype(np.uint8)


def modulate(c: Constellation, bits: np.ndarray) -> np.ndarray:
    """Map a bit array (last axis a multiple of ``q``) to unit-energy symbols."""
    return c.points[bits_to_labels(bits, c.q)]


def _slice_axis(u: np.ndarray, n: int, gray: np.ndarray, tie_up: np.ndarray) -> np.ndarray:
    if n == 1:
        return np.zeros(u.shape, dtype=np.int64)
    t = 0.5 * (u + (n - 1))
    lo = np.floor(t)
    frac = t - lo
    lo_i = np.clip(lo, -1, n).astype(np.int64)
    idx = lo_i + (frac > 0.5)
    tie = frac == 0.5
    if np.any(tie):
        idx = np.where(tie, lo_i + tie_up[np.clip(lo_i, 0, n - 1)], idx)
    return gray[np.clip(idx, 0, n - 1)]


def slice_labels(c: Constellation, z: np.ndarray) -> np.ndarray:
    """Nearest-point labels for equalised samples ``z``.

    Equidistant candidates resolve to the lowest label.
    """
    z = np.asarray(z, dtype=np.complex128)
    gi = _slice_axis(z.real / c.scale, c.n_inphase, c.gray_inphase, c.tie_up_inphase)
    gq = _slice_axis(z.imag / c.scale, c.n_quadrature, c.gray_quadrature, c.tie_up_quadrature)
    return (gi << c.bits_quadrature) | gq


def demodulate(
    c: Constellation,
    received: np.ndarray,
    channel_estimate: complex | np.ndarray,
    amplitude: float | np.ndarray = 1.0,
) -> np.ndarray:
    """Coherent hard-decision detection against ``channel_estimate * amplitude``.

    ``channel_estimate`` and ``amplitude`` broadcast against ``received``.
    Returns the concatenated bit labels along the last axis.
    """
    h = np.asarray(channel_estimate, dtype=np.complex128)
    if np.any(h == 0):
        raise ZeroDivisionError("channel estimate is zero")
    z = np.asarray(received, dtype=np.complex128) / (h * amplitude)
    labels = slice_labels(c, np.atleast_1d(z))
    return labels_to_bits(labels, c.q)
