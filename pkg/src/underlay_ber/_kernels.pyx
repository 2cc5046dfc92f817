# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loop of the decode-and-forward chain simulation.

Arithmetic mirrors ``_kernels_py`` operation by operation so both backends
return identical decisions for identical random inputs.
"""
from libc.stdint cimport int64_t, uint8_t, uint64_t
from libc.stdlib cimport free, malloc

import numpy as np


cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil


cdef inline int64_t _slice(double u, int n, const int64_t* gray,
                           const uint8_t* tie_up) noexcept nogil:
    cdef double t, frac
    cdef int64_t lo_i, idx
    if n == 1:
        return 0
    t = 0.5 * (u + (n - 1))
    # outside the lattice (or NaN) the outermost level wins; also keeps the cast defined
    if not t >= 0.0:
        return gray[0]
    if t >= n - 1:
        return gray[n - 1]
    lo_i = <int64_t>t
    frac = t - lo_i
    # branch-free: the comparison outcome is random per symbol
    idx = lo_i + <int64_t>(frac > 0.5) + <int64_t>(frac == 0.5) * tie_up[lo_i]
    return gray[idx]


def df_chain(
    const int64_t[:, ::1] src,
    const double[:, ::1] h_re,
    const double[:, ::1] h_im,
    const double[:, ::1] hh_re,
    const double[:, ::1] hh_im,
    const double[:, ::1] amp,
    const double[:, :, ::1] n_re,
    const double[:, :, ::1] n_im,
    const double[::1] pt_re,
    const double[::1] pt_im,
    double scale,
    int n_i,
    int n_q,
    int b_q,
    const int64_t[::1] gray_i,
    const int64_t[::1] gray_q,
    const uint8_t[::1] tie_i,
    const uint8_t[::1] tie_q,
    int64_t[:, ::1] dest,
    int64_t[::1] block_errors,
):
    """Push ``src`` labels through every hop.

    Destination labels go to ``dest``, bit errors per block to
    ``block_errors``; returns the total bit error count.
    """
    cdef Py_ssize_t n_hops = h_re.shape[0]
    cdef Py_ssize_t n_blk = src.shape[0]
    cdef Py_ssize_t k_len = src.shape[1]
    cdef Py_ssize_t b, k, h
    cdef int64_t lab, gi, gq
    cdef double a, sx, sy, yr, yi, hr, hi, er, ei, inv, zr, zi
    cdef uint64_t errors = 0
    cdef int64_t blk_err
    # raw pointers keep memoryview bookkeeping out of the per-symbol calls
    cdef const int64_t* gi_p = &gray_i[0]
    cdef const int64_t* gq_p = &gray_q[0]
    cdef const uint8_t* ti_p = &tie_i[0]
    cdef const uint8_t* tq_p = &tie_q[0]
    cdef const double* px = &pt_re[0]
    cdef const double* py = &pt_im[0]
    # per-hop coefficients of the current block, and its noise rows
    cdef double[:, ::1] coef = np.empty((n_hops, 6))
    cdef double* cf = &coef[0, 0]
    cdef const double** nr = <const double**>malloc(n_hops * sizeof(double*))
    cdef const double** ni = <const double**>malloc(n_hops * sizeof(double*))
    if nr == NULL or ni == NULL:
        free(nr)
        free(ni)
        raise MemoryError()
    with nogil:
        for b in range(n_blk):
            for h in range(n_hops):
                a = amp[h, b]
                er = hh_re[h, b]
                ei = hh_im[h, b]
                cf[6 * h] = a
                cf[6 * h + 1] = h_re[h, b]
                cf[6 * h + 2] = h_im[h, b]
                cf[6 * h + 3] = er
                cf[6 * h + 4] = ei
                cf[6 * h + 5] = 1.0 / ((er * er + ei * ei) * a * scale)
                nr[h] = &n_re[h, b, 0]
                ni[h] = &n_im[h, b, 0]
            blk_err = 0
            for k in range(k_len):
                lab = src[b, k]
                for h in range(n_hops):
                    a = cf[6 * h]
                    hr = cf[6 * h + 1]
                    hi = cf[6 * h + 2]
                    er = cf[6 * h + 3]
                    ei = cf[6 * h + 4]
                    inv = cf[6 * h + 5]
                    sx = a * px[lab]
                    sy = a * py[lab]
                    yr = (hr * sx - hi * sy) + nr[h][k]
                    yi = (hr * sy + hi * sx) + ni[h][k]
                    # equalised sample in units of the level spacing
                    zr = (yr * er + yi * ei) * inv
                    zi = (yi * er - yr * ei) * inv
                    gi = _slice(zr, n_i, gi_p, ti_p)
                    gq = _slice(zi, n_q, gq_p, tq_p)
                    lab = (gi << b_q) | gq
                dest[b, k] = lab
                blk_err += __builtin_popcountll(<unsigned long long>(lab ^ src[b, k]))
            block_errors[b] = blk_err
            errors += blk_err
    free(nr)
    free(ni)
    return int(errors)
