"""Compare the compiled and numpy chain kernels on identical pre-drawn inputs.

Usage: python benchmarks/bench_kernels.py [--blocks N] [--block-length K] [--repeat R]
"""
from __future__ import annotations

import argparse
import math
import time

import numpy as np

from underlay_ber import kernels
from underlay_ber.channel import EstimatorConfig, default_topology
from underlay_ber.qam import build_constellation
from underlay_ber.simulator import SimConfig, chunk_rng, sample_blocks


def make_inputs(m: int, n_hops: int, n_blocks: int, k: int, seed: int = 0):
    cfg = SimConfig(topology=default_topology(n_hops), mu=10.0, m=m, estimator=EstimatorConfig(1))
    c = build_constellation(cfg.q)
    rng = chunk_rng(seed, 0)
    b = sample_blocks(cfg.hops(), n_blocks, rng)
    labels = rng.integers(0, c.m, size=(n_blocks, k))
    z = math.sqrt(0.5) * rng.standard_normal((n_hops, 2, n_blocks, k))
    h = b.h
    return [
        labels,
        np.ascontiguousarray(h.real), np.ascontiguousarray(h.imag),
        np.ascontiguousarray(b.h_hat.real), np.ascontiguousarray(b.h_hat.imag),
        np.sqrt(b.power),
        np.ascontiguousarray(z[:, 0]), np.ascontiguousarray(z[:, 1]),
        np.ascontiguousarray(c.points.real), np.ascontiguousarray(c.points.imag),
        c.scale, c.n_inphase, c.n_quadrature, c.bits_quadrature,
        c.gray_inphase, c.gray_quadrature, c.tie_up_inphase, c.tie_up_quadrature,
    ]


def best_time(kernel, args, repeat: int) -> tuple[float, int]:
    best, total = math.inf, -1
    for _ in range(repeat):
        dest = np.empty_like(args[0])
        per_block = np.zeros(args[0].shape[0], dtype=np.int64)
        t0 = time.perf_counter()
        total = kernel(*args, dest, per_block)
        best = min(best, time.perf_counter() - t0)
    return best, total


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--blocks", type=int, default=20_000)
    ap.add_argument("--block-length", type=int, default=100)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    print(f"default backend: {kernels.BACKEND}")
    print(f"{'M':>4} {'hops':>4} {'symbols/hop':>12} {'python s':>10} {'cython s':>10} {'speedup':>8}")
    for m in (2, 4, 16, 64):
        for n_hops in (2, 3):
            inputs = make_inputs(m, n_hops, args.blocks, args.block_length)
            t_py, e_py = best_time(kernels.df_chain_python, inputs, args.repeat)
            if kernels.df_chain_compiled is None:
                cy = "n/a"
                speed = "n/a"
            else:
                t_cy, e_cy = best_time(kernels.df_chain_compiled, inputs, args.repeat)
                if e_cy != e_py:
                    raise SystemExit(f"backends disagree for M={m}, hops={n_hops}: {e_cy} != {e_py}")
                cy = f"{t_cy:10.4f}"
                speed = f"{t_py / t_cy:7.1f}x"
            print(f"{m:>4} {n_hops:>4} {args.blocks * args.block_length:>12} {t_py:10.4f} {cy:>10} {speed:>8}")


if __name__ == "__main__":
    main()
