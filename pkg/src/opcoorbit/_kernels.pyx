# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops. Keep signatures in sync with ``_fallback.py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt
from libc.stdint cimport uint64_t

cnp.import_array()


def tf_atoms(const double complex[:, ::1] windows,
             const long long[::1] xs,
             const long long[::1] ws,
             const double complex[::1] twiddle):
    """out[n, j, m] = twiddle[(ws[j] * n) % N] * windows[m, (n - xs[j]) % N]"""
    cdef Py_ssize_t r = windows.shape[0]
    cdef Py_ssize_t n_dim = windows.shape[1]
    cdef Py_ssize_t n_pts = xs.shape[0]
    out = np.empty((n_dim, n_pts, r), dtype=np.complex128)
    cdef double[:, :, ::1] o = out.view(np.float64)
    cdef Py_ssize_t n, j, m, src
    cdef long long x, w
    cdef double pr, pi, wr, wi
    with nogil:
        for n in range(n_dim):
            for j in range(n_pts):
                x = xs[j] % n_dim
                w = ws[j] % n_dim
                pr = twiddle[(w * n) % n_dim].real
                pi = twiddle[(w * n) % n_dim].imag
                src = (n - x + n_dim) % n_dim
                for m in range(r):
                    # spelled out in real arithmetic: same rounding as numpy, no __muldc3 call
                    wr = windows[m, src].real
                    wi = windows[m, src].imag
                    o[n, j, 2 * m] = pr * wr - pi * wi
                    o[n, j, 2 * m + 1] = pr * wi + pi * wr
    return out


def error_sweep(const double complex[:, ::1] start,
                const double complex[:, :, ::1] us,
                const double complex[:, :, ::1] vs):
    """Frobenius norms of start - sum_{j<K} us[j] @ vs[j]^H for K = 0..L."""
    cdef Py_ssize_t n_dim = start.shape[0]
    cdef Py_ssize_t n_terms = us.shape[0]
    cdef Py_ssize_t r = us.shape[2]
    resid = np.array(start, dtype=np.complex128, copy=True)
    norms = np.empty(n_terms + 1, dtype=np.float64)
    cdef double[:, ::1] e = resid.view(np.float64)
    cdef double[::1] out = norms
    cdef Py_ssize_t j, a, b, m
    cdef double ar, ai, ur, ui, vr, vi, er, ei
    cdef double s
    with nogil:
        s = 0.0
        for a in range(n_dim):
            for b in range(2 * n_dim):
                s = s + e[a, b] * e[a, b]
        out[0] = sqrt(s)
        for j in range(n_terms):
            s = 0.0
            for a in range(n_dim):
                for b in range(n_dim):
                    ar = 0.0
                    ai = 0.0
                    for m in range(r):
                        # u * conj(v)
                        ur = us[j, a, m].real
                        ui = us[j, a, m].imag
                        vr = vs[j, b, m].real
                        vi = vs[j, b, m].imag
                        ar = ar + (ur * vr + ui * vi)
                        ai = ai + (ui * vr - ur * vi)
                    er = e[a, 2 * b] - ar
                    ei = e[a, 2 * b + 1] - ai
                    e[a, 2 * b] = er
                    e[a, 2 * b + 1] = ei
                    s = s + er * er + ei * ei
            out[j + 1] = sqrt(s)
    return norms


cdef inline uint64_t _rotl(uint64_t x, int k) nogil:
    return (x << k) | (x >> (64 - k))


def xoshiro_fill(uint64_t[::1] state, uint64_t[::1] out):
    """xoshiro256** stream; advances ``state`` in place."""
    cdef uint64_t s0 = state[0], s1 = state[1], s2 = state[2], s3 = state[3]
    cdef uint64_t t
    cdef Py_ssize_t i
    with nogil:
        for i in range(out.shape[0]):
            out[i] = _rotl(s1 * 5, 7) * 9
            t = s1 << 17
            s2 ^= s0
            s3 ^= s1
            s1 ^= s2
            s0 ^= s3
            s2 ^= t
            s3 = _rotl(s3, 45)
    state[0] = s0
    state[1] = s1
    state[2] = s2
    state[3] = s3
