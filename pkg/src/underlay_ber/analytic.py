"""Closed-form per-hop and end-to-end average BER of the underlay DF chain.

The per-hop BER averages the Gray-coded QAM bit error probability of an AWGN
link over the density of the effective SNR

    f(x) = kappa_tr mu exp(lambda_tP mu sigma_tr) / (x + kappa_tr mu)**2,

which turns every Q-function term into a scaled ``zeta`` integral. The
quadrature path integrates the same product numerically and is kept as an
oracle for the closed form.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from .channel import HopParams
from .special import q_function, semi_infinite_quad, zeta_closed

__all__ = [
    "ModParams",
    "ModelInconsistencyWarning",
    "psi_awgn",
    "psi_terms",
    "theta",
    "hop_ber",
    "hop_ber_quadrature",
    "awgn_ber",
    "end_to_end_ber",
    "chain_ber",
    "effective_snr_pdf",
]

log = logging.getLogger(__name__)


class ModelInconsistencyWarning(RuntimeWarning):
    """A per-hop BER above 1/2 was produced by the unnormalised SNR density."""


@dataclass(frozen=True)
class ModParams:
    """QAM order and the constants of its Gray-coded BER expansion."""

    m: int
    q: int
    g: float
    u: float
    i_dim: int
    j_dim: int

    @classmethod
    def from_order(cls, m: int) -> "ModParams":
        q = int(m).bit_length() - 1
        if m < 2 or 2**q != m:
            raise ValueError(f"QAM order must be a power of two >= 2, got {m!r}")
        i_dim = 2 ** ((q - 1) // 2) if q % 2 else 0
        j_dim = 2 ** ((q + 1) // 2) if q % 2 else 0
        u = 6.0 / (i_dim**2 + j_dim**2 - 2) if q % 2 else float("nan")
        return cls(m=m, q=q, g=3.0 / (m - 1), u=u, i_dim=i_dim, j_dim=j_dim)

    @property
    def square(self) -> bool:
        return self.q % 2 == 0

    def branches(self) -> list[tuple[int, float, float]]:
        """``(s, v, multiplier)`` triples whose sum gives the bit error rate."""
        if self.square:
            return [(math.isqrt(self.m), self.g, 2.0)]
        return [(self.i_dim, self.u, 1.0), (self.j_dim, self.u, 1.0)]


def psi_terms(s: int, m: int) -> Iterator[tuple[int, int]]:
    """Yield ``(2i + 1, signed weight)`` for every term of the double sum.

    Order is increasing ``i`` within increasing ``k``. The common prefactor
    ``2 / (s log2 M)`` is not included.
    """
    if s < 1 or s & (s - 1):
        raise ValueError(f"s must be a power of two, got {s!r}")
    for k in range(1, s.bit_length()):
        p = 1 << (k - 1)
        n_i = s - s // (1 << k)  # (1 - 2**-k) s
        for i in range(n_i):
            sign = -1 if (i * p // s) % 2 else 1
            weight = p - (2 * i * p + s) // (2 * s)
            yield 2 * i + 1, sign * weight


def _prefactor(s: int, m: int) -> float:
    return 2.0 / (s * math.log2(m))


def psi_awgn(s: int, v: float, m: int, gamma: float) -> float:
    """Fixed-SNR bit error contribution of one QAM axis with ``s`` levels."""
    if gamma < 0:
        raise ValueError(f"gamma must be >= 0, got {gamma!r}")
    terms = [w * q_function(math.sqrt(c * c * v * gamma)) for c, w in psi_terms(s, m)]
    return _prefactor(s, m) * math.fsum(terms)


def awgn_ber(mod: ModParams, gamma: float) -> float:
    """Exact Gray-coded QAM BER at a fixed SNR ``gamma`` (symbol energy over N0)."""
    return math.fsum(mult * psi_awgn(s, v, mod.m, gamma) for s, v, mult in mod.branches())


def effective_snr_pdf(hop: HopParams, x: float) -> float:
    a = hop.kappa_tr * hop.mu
    return a * hop.pdf_mass / (x + a) ** 2


def theta(s: int, v: float, hop: HopParams, m: int) -> float:
    """SNR-averaged counterpart of :func:`psi_awgn` for one hop."""
    a = hop.kappa_tr * hop.mu
    scale = a * hop.pdf_mass
    terms = [w * zeta_closed(c * c * v, a) for c, w in psi_terms(s, m)]
    return _prefactor(s, m) * scale * math.fsum(terms)


def hop_ber(hop: HopParams, mod: ModParams) -> float:
    """Closed-form average BER of a single hop, reported unclamped."""
    value = math.fsum(mult * theta(s, v, hop, mod.m) for s, v, mult in mod.branches())
    if value > 0.5:
        warnings.warn(
            f"hop BER {value:.6g} exceeds 1/2 (density mass {hop.pdf_mass:.4g})",
            ModelInconsistencyWarning,
            stacklevel=2,
        )
    return value


def hop_ber_quadrature(hop: HopParams, mod: ModParams, rtol: float = 1e-11) -> float:
    """Average BER of a hop by numerically integrating BER(gamma) f(gamma)."""
    a = hop.kappa_tr * hop.mu
    branches = mod.branches()
    v_min = min(v for _, v, _ in branches)
    # bound on |sum of weights x prefactor x multiplier|; each Q term <= exp(-v x / 2) / 2
    w_abs = sum(
        mult * _prefactor(s, mod.m) * sum(abs(w) for _, w in psi_terms(s, mod.m))
        for s, _, mult in branches
    )

    def f(x: float) -> float:
        return awgn_ber(mod, x) * effective_snr_pdf(hop, x)

    def tail(T: float) -> float:
        return w_abs * 0.5 * math.exp(-0.5 * v_min * T) * a * hop.pdf_mass / (T + a)

    value, _ = semi_infinite_quad(f, [a, 1.0 / v_min], tail, rtol=rtol)
    return value


def end_to_end_ber(hops: Sequence[float], clamp: bool = False) -> float:
    """Combine per-hop BERs of a hard-decision DF chain.

    ``sum_n p_n prod_{j>n} (1 - 2 p_j)``. With ``clamp=True`` hop values
    above 1/2 are clamped (with a warning) instead of rejected.
    """
    if len(hops) == 0:
        raise ValueError("at least one hop is required")
    checked = []
    for n, p in enumerate(hops, start=1):
        if not 0.0 <= p <= 0.5:
            if clamp and p > 0.5:
                warnings.warn(
                    f"hop {n} BER {p:.6g} clamped to 0.5", ModelInconsistencyWarning, stacklevel=2
                )
                log.warning("hop %d BER %.6g clamped to 0.5", n, p)
                p = 0.5
            else:
                raise ValueError(f"hop {n} BER {p!r} outside [0, 0.5]")
        checked.append(p)
    total = 0.0
    survive = 1.0
    for p in reversed(checked):
        total += p * survive
        survive *= 1.0 - 2.0 * p
    # exact result lies in [0, 1/2]; rounding can overshoot by an ulp
    return min(total, 0.5)


def chain_ber(hops: Iterable[HopParams], mod: ModParams) -> tuple[list[float], float]:
    """Per-hop closed-form BERs and their end-to-end combination."""
    per_hop = [hop_ber(h, mod) for h in hops]
    return per_hop, end_to_end_ber(per_hop, clamp=True)
