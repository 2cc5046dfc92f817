"""Monte-Carlo link-level simulation of the underlay decode-and-forward chain.

Every hop sees block Rayleigh fading. Transmitters know only channel
estimates ``h_hat = h - eps``; node ``t`` sets its power to
``I_T / |h_hat_tP|**2`` and receivers detect coherently against ``h_hat``.
Noise power is 1, so ``I_T = mu``.

Random numbers come from counter-based Philox streams, one per chunk of
``chunk_blocks`` fading blocks. Chunks are dealt round-robin to ``streams``
worker threads and merged in chunk order, so the totals depend only on the
seed, never on the number of streams.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .analytic import ModParams
from .channel import EstimatorConfig, HopParams, Topology, build_chain_params
from .qam import Constellation, build_constellation, demodulate, labels_to_bits, modulate

__all__ = [
    "SimConfig",
    "BerEstimate",
    "BlockChannels",
    "ChainCounts",
    "chunk_rng",
    "sample_blocks",
    "run_hop",
    "run_chain_trial",
    "run_chunk",
    "estimate_ber",
    "estimate_interference_probability",
]


@dataclass(frozen=True)
class SimConfig:
    topology: Topology
    alpha: float = 3.0
    mu: float = 10.0
    m: int = 2
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    block_length: int = 100
    min_bit_errors: int = 100
    max_blocks: int = 1_000_000
    seed: int = 0
    streams: int = 1
    chunk_blocks: int = 1000

    def __post_init__(self) -> None:
        for name in ("block_length", "min_bit_errors", "max_blocks", "streams", "chunk_blocks"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")
        ModParams.from_order(self.m)

    @property
    def q(self) -> int:
        return self.m.bit_length() - 1

    def hops(self) -> list[HopParams]:
        return build_chain_params(self.topology, self.alpha, self.mu, self.estimator)


@dataclass(frozen=True)
class BerEstimate:
    errors: int
    bits: int
    blocks: int
    interference_exceedance: float
    budget_exhausted: bool
    # sum over blocks of (bit errors in the block)**2
    block_error_sq: int = 0

    @property
    def ber(self) -> float:
        return self.errors / self.bits if self.bits else 0.0

    @property
    def stderr(self) -> float:
        """Binomial standard error of :attr:`ber`."""
        if not self.bits:
            return 0.0
        p = self.ber
        return math.sqrt(p * (1.0 - p) / self.bits)

    @property
    def block_stderr(self) -> float:
        """Standard error from the spread of per-block error counts.

        Bits inside one fading block share a channel and are not independent,
        so this is the honest uncertainty; :attr:`stderr` understates it by
        roughly the square root of the within-block correlation length.
        """
        if self.blocks < 2:
            return float("inf")
        n = self.bits / self.blocks
        mean = self.errors / self.blocks
        var = (self.block_error_sq / self.blocks - mean * mean) * self.blocks / (self.blocks - 1)
        return math.sqrt(max(var, 0.0) / self.blocks) / n


@dataclass(frozen=True)
class BlockChannels:
    """Per-hop channel draws, arrays of shape ``(n_hops, n_blocks)``."""

    h_hat: np.ndarray
    eps: np.ndarray
    h_hat_tp: np.ndarray
    eps_tp: np.ndarray
    power: np.ndarray
    mu: float

    @property
    def h(self) -> np.ndarray:
        return self.h_hat + self.eps

    @property
    def h_tp(self) -> np.ndarray:
        return self.h_hat_tp + self.eps_tp

    @property
    def exceedances(self) -> np.ndarray:
        """True where ``power |h_tP|**2 > I_T``, i.e. ``|h_tP| > |h_hat_tP|``."""
        return np.abs(self.h_tp) > np.abs(self.h_hat_tp)


@dataclass(frozen=True)
class ChainCounts:
    errors: int
    bits: int
    exceedances: int
    tx_events: int
    block_error_sq: int = 0


def chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    """Generator for one chunk: Philox keyed by ``seed``, counter block ``chunk``."""
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, chunk, 0]))


def sample_blocks(
    hops: list[HopParams], n_blocks: int, rng: np.random.Generator
) -> BlockChannels:
    """Independent block-fading draws for the data and primary links of every hop."""
    n_hops = len(hops)
    z = rng.standard_normal((4, 2, n_hops, n_blocks))
    cn = z[:, 0] + 1j * z[:, 1]

    def col(values):
        return np.sqrt(np.asarray(values, dtype=float) / 2.0)[:, None]

    h_hat = cn[0] * col([h.eta_tr - h.sigma_tr for h in hops])
    eps = cn[1] * col([h.sigma_tr for h in hops])
    h_hat_tp = cn[2] * col([h.eta_tp - h.sigma_tp for h in hops])
    eps_tp = cn[3] * col([h.sigma_tp for h in hops])
    mu = hops[0].mu
    power = mu / np.abs(h_hat_tp) ** 2
    return BlockChannels(h_hat, eps, h_hat_tp, eps_tp, power, mu)


def run_hop(
    block: BlockChannels,
    hop_index: int,
    c: Constellation,
    tx_bits: np.ndarray,
    n0: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Transmit ``tx_bits`` (shape ``(n_blocks, K q)``) over hop ``hop_index`` (1-based)."""
    n = hop_index - 1
    x = modulate(c, tx_bits)
    amp = np.sqrt(block.power[n])[:, None]
    z = rng.standard_normal((2,) + x.shape)
    noise = math.sqrt(n0 / 2.0) * (z[0] + 1j * z[1])
    y = block.h[n][:, None] * (amp * x) + noise
    return demodulate(c, y, block.h_hat[n][:, None], amp)


def run_chain_trial(cfg: SimConfig, rng: np.random.Generator, n_blocks: int = 1) -> ChainCounts:
    """Reference (unoptimised) chain run built from :func:`run_hop`.

    Consumes the random stream in the same order as :func:`run_chunk`, so both
    give identical counts for the same generator state.
    """
    hops = cfg.hops()
    c = build_constellation(cfg.q)
    block = sample_blocks(hops, n_blocks, rng)
    labels = rng.integers(0, c.m, size=(n_blocks, cfg.block_length))
    src_bits = labels_to_bits(labels, c.q)
    bits = src_bits
    for n in range(1, len(hops) + 1):
        bits = run_hop(block, n, c, bits, 1.0, rng)
    per_block = np.count_nonzero(bits != src_bits, axis=1).astype(np.int64)
    exc = block.exceedances
    return ChainCounts(
        int(per_block.sum()), src_bits.size, int(exc.sum()), exc.size, int(per_block @ per_block)
    )


def run_chunk(
    cfg: SimConfig,
    hops: list[HopParams],
    c: Constellation,
    rng: np.random.Generator,
    n_blocks: int,
    kernel=None,
) -> ChainCounts:
    """Fast chain run over ``n_blocks`` blocks through the selected kernel."""
    kernel = kernel or kernels.df_chain
    n_hops = len(hops)
    k_len = cfg.block_length
    block = sample_blocks(hops, n_blocks, rng)
    labels = rng.integers(0, c.m, size=(n_blocks, k_len))
    z = rng.standard_normal((n_hops, 2, n_blocks, k_len))
    s = math.sqrt(0.5)
    h = block.h
    dest = np.empty_like(labels)
    per_block = np.zeros(n_blocks, dtype=np.int64)
    errors = kernel(
        labels,
        np.ascontiguousarray(h.real),
        np.ascontiguousarray(h.imag),
        np.ascontiguousarray(block.h_hat.real),
        np.ascontiguousarray(block.h_hat.imag),
        np.sqrt(block.power),
        np.ascontiguousarray(s * z[:, 0]),
        np.ascontiguousarray(s * z[:, 1]),
        np.ascontiguousarray(c.points.real),
        np.ascontiguousarray(c.points.imag),
        c.scale,
        c.n_inphase,
        c.n_quadrature,
        c.bits_quadrature,
        c.gray_inphase,
        c.gray_quadrature,
        c.tie_up_inphase,
        c.tie_up_quadrature,
        dest,
        per_block,
    )
    exc = block.exceedances
    return ChainCounts(
        errors, labels.size * c.q, int(exc.sum()), exc.size, int(per_block @ per_block)
    )


def _chunk_sizes(cfg: SimConfig):
    n_chunks = -(-cfg.max_blocks // cfg.chunk_blocks)
    for i in range(n_chunks):
        yield i, min(cfg.chunk_blocks, cfg.max_blocks - i * cfg.chunk_blocks)


def estimate_ber(cfg: SimConfig) -> BerEstimate:
    """Simulate until ``min_bit_errors`` destination errors or ``max_blocks`` blocks."""
    hops = cfg.hops()
    c = build_constellation(cfg.q)

    def work(item):
        i, n = item
        return run_chunk(cfg, hops, c, chunk_rng(cfg.seed, i), n)

    errors = bits = exc = tx = blocks = sq = 0
    chunks = list(_chunk_sizes(cfg))
    done = False
    with ThreadPoolExecutor(max_workers=cfg.streams) as pool:
        for start in range(0, len(chunks), cfg.streams):
            wave = chunks[start : start + cfg.streams]
            for (_, n), res in zip(wave, pool.map(work, wave)):
                errors += res.errors
                bits += res.bits
                exc += res.exceedances
                tx += res.tx_events
                sq += res.block_error_sq
                blocks += n
                if errors >= cfg.min_bit_errors:
                    done = True
                    break
            if done:
                break
    return BerEstimate(
        errors=errors,
        bits=bits,
        blocks=blocks,
        interference_exceedance=exc / tx if tx else 0.0,
        budget_exhausted=not done,
        block_error_sq=sq,
    )


def estimate_interference_probability(cfg: SimConfig) -> float:
    """Fraction of (block, transmitter) pairs whose interference exceeds ``I_T``.

    Uses all ``max_blocks`` blocks; the channel draws coincide with those of
    :func:`estimate_ber` for the same seed.
    """
    hops = cfg.hops()
    exc = tx = 0
    for i, n in _chunk_sizes(cfg):
        block = sample_blocks(hops, n, chunk_rng(cfg.seed, i))
        e = block.exceedances
        exc += int(e.sum())
        tx += e.size
    return exc / tx
