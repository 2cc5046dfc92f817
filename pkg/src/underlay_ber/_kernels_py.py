"""Pure-numpy fallback for the compiled chain kernel (same signature)."""
from __future__ import annotations

import numpy as np


def _popcount(x: np.ndarray) -> np.ndarray:
    if hasattr(np, "bitwise_count"):
        return np.bitwise_count(x)
    x = x.astype(np.uint64)
    count = np.zeros(x.shape, dtype=np.int64)
    while np.any(x):
        count += (x & np.uint64(1)).astype(np.int64)
        x >>= np.uint64(1)
    return count


def _slice(u, n, gray, tie_up):
    if n == 1:
        return np.zeros(u.shape, dtype=np.int64)
    t = 0.5 * (u + (n - 1))
    lo = np.floor(t)
    frac = t - lo
    lo_i = np.clip(lo, -1, n).astype(np.int64)
    idx = np.where(frac > 0.5, lo_i + 1, lo_i)
    tie = frac == 0.5
    if tie.any():
        idx = np.where(tie, lo_i + tie_up[np.clip(lo_i, 0, n - 1)], idx)
    return gray[np.clip(idx, 0, n - 1)]


def df_chain(
    src, h_re, h_im, hh_re, hh_im, amp, n_re, n_im, pt_re, pt_im,
    scale, n_i, n_q, b_q, gray_i, gray_q, tie_i, tie_q, dest, block_errors,
):
    """Push ``src`` labels through every hop; see the compiled twin for outputs."""
    lab = np.asarray(src)
    for h in range(h_re.shape[0]):
        a = amp[h][:, None]
        er = hh_re[h][:, None]
        ei = hh_im[h][:, None]
        inv = 1.0 / ((er * er + ei * ei) * a * scale)
        sx = a * pt_re[lab]
        sy = a * pt_im[lab]
        hr = h_re[h][:, None]
        hi = h_im[h][:, None]
        yr = (hr * sx - hi * sy) + n_re[h]
        yi = (hr * sy + hi * sx) + n_im[h]
        zr = (yr * er + yi * ei) * inv
        zi = (yi * er - yr * ei) * inv
        gi = _slice(zr, n_i, gray_i, tie_i)
        gq = _slice(zi, n_q, gray_q, tie_q)
        lab = (gi << b_q) | gq
    dest[...] = lab
    block_errors[...] = _popcount(lab ^ np.asarray(src)).sum(axis=1)
    return int(block_errors.sum())
