"""Pure-Python implementations of the kernels in ``_kernels.pyx``.

Same signatures and semantics; used when the extension is not built or
when ``OPCOORBIT_PURE=1`` is set.
"""

import numpy as np

_MASK = (1 << 64) - 1


def tf_atoms(windows, xs, ws, twiddle):
    windows = np.asarray(windows, dtype=np.complex128)
    n_dim = windows.shape[1]
    xs = np.asarray(xs, dtype=np.int64) % n_dim
    ws = np.asarray(ws, dtype=np.int64) % n_dim
    n = np.arange(n_dim, dtype=np.int64)
    phase = np.asarray(twiddle)[(n[:, None] * ws[None, :]) % n_dim][:, :, None]
    vals = windows.T[(n[:, None] - xs[None, :]) % n_dim]
    # real arithmetic with separate roundings; numpy's complex multiply may fuse
    # into FMA on some CPUs, which would break agreement with the compiled path
    pr, pi, wr, wi = phase.real, phase.imag, vals.real, vals.imag
    out = np.empty(vals.shape, dtype=np.complex128)
    out.real = pr * wr - pi * wi
    out.imag = pr * wi + pi * wr
    return out


def error_sweep(start, us, vs):
    resid = np.array(start, dtype=np.complex128, copy=True)
    norms = np.empty(us.shape[0] + 1)
    norms[0] = np.sqrt(np.vdot(resid, resid).real)
    for j in range(us.shape[0]):
        resid -= us[j] @ vs[j].conj().T
        norms[j + 1] = np.sqrt(np.vdot(resid, resid).real)
    return norms


def _rotl(x, k):
    return ((x << k) | (x >> (64 - k))) & _MASK


def xoshiro_fill(state, out):
    s0, s1, s2, s3 = (int(v) for v in state)
    vals = []
    for _ in range(len(out)):
        vals.append((_rotl((s1 * 5) & _MASK, 7) * 9) & _MASK)
        t = (s1 << 17) & _MASK
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
    out[:] = np.array(vals, dtype=np.uint64)
    state[:] = np.array([s0, s1, s2, s3], dtype=np.uint64)
