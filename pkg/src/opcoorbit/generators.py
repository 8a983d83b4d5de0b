"""Test-operator families and analysis-window factories.

Spreading fields are (N, N) arrays indexed [x, w]; the operator they define
is ``H = sum_z eta(z) pi(z)``.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import DimensionMismatch
from .finite_tf import Lattice, gaussian_window, tf_atoms, tf_shift, wrapped_distance
from .hs_ops import OperatorWindow, as_operator
from .rng import RngStream


def _grid_distance(n: int) -> np.ndarray:
    k = np.arange(n)
    return wrapped_distance((k[:, None], k[None, :]), (0, 0), n)


def spreading_to_operator(eta) -> np.ndarray:
    eta = np.asarray(eta, dtype=np.complex128)
    if eta.ndim != 2 or eta.shape[0] != eta.shape[1]:
        raise DimensionMismatch(f"spreading field must be square, got {eta.shape}")
    n = eta.shape[0]
    # row x of q holds sum_w eta(x, w) exp(2 pi i w t / N) as a function of t
    q = n * np.fft.ifft(eta, axis=1)
    t = np.arange(n)
    H = np.empty((n, n), dtype=np.complex128)
    H[t[None, :], (t[None, :] - t[:, None]) % n] = q
    return H


def operator_to_spreading(H) -> np.ndarray:
    H = as_operator(H)
    n = H.shape[0]
    t = np.arange(n)
    diag = H[t[None, :], (t[None, :] - t[:, None]) % n]
    return np.fft.fft(diag, axis=1) / n


def gaussian_spreading(n: int, width: float = 1.0) -> np.ndarray:
    if width <= 0:
        raise ValueError("width must be positive")
    return np.exp(-np.pi * _grid_distance(n) ** 2 / (width * n)).astype(np.complex128)


def gabor_multiplier(mask, g) -> np.ndarray:
    """(1/N) sum_z mask(z) P(pi(z) g) over the full grid, with g normalized."""
    mask = np.asarray(mask, dtype=float)
    g = np.asarray(g, dtype=np.complex128)
    n = g.shape[0]
    if mask.shape != (n, n):
        raise DimensionMismatch(f"mask shape {mask.shape} != ({n}, {n})")
    g = g / np.linalg.norm(g)
    atoms = tf_atoms(g, Lattice.full(n))[:, :, 0]
    H = (atoms * mask.ravel()[None, :]) @ atoms.conj().T / n
    if np.isrealobj(mask):
        H = (H + H.conj().T) / 2
    return H


def two_blob_mask(n: int, side: int | None = None, centers=None) -> np.ndarray:
    """Indicator of two square phase-space regions (wrapped)."""
    side = max(1, n // 8) if side is None else int(side)
    if centers is None:
        centers = [(n // 4, n // 4), (5 * n // 8, 5 * n // 8)]
    mask = np.zeros((n, n))
    offs = np.arange(side) - side // 2
    for cx, cw in centers:
        mask[np.ix_((cx + offs) % n, (cw + offs) % n)] = 1.0
    return mask


def mixed_state(g, count: int, rng: RngStream, jitter_scale: float = 20.0,
                jitter_amp: float = 0.3, normalize: bool = False) -> np.ndarray:
    """Sum of projectors onto randomly shifted windows plus weaker jittered copies.

    Each round draws a uniform shift z and a rounded-Gaussian shift w and adds
    P(pi(z) g) + jitter_amp^2 P(pi(w) g), where P(v) = v v^H.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    g = np.asarray(g, dtype=np.complex128)
    n = g.shape[0]
    vecs = np.empty((n, 2 * count), dtype=np.complex128)
    for k in range(count):
        z = rng.integers(n, 2)
        w = np.rint(jitter_scale * rng.standard_normal(2)).astype(np.int64) % n
        vecs[:, 2 * k] = tf_shift(g, z)
        vecs[:, 2 * k + 1] = jitter_amp * tf_shift(g, w)
    F = vecs @ vecs.conj().T
    F = (F + F.conj().T) / 2
    if normalize:
        F = F / np.trace(F).real
    return F


def weighted_fw_field(alpha: float | None, n: int, rng: RngStream, gaussian: bool = False) -> np.ndarray:
    """Complex Gaussian field times (1 + |z|)^-alpha, or times exp(-pi |z|^2 / N) if ``gaussian``."""
    d = _grid_distance(n)
    if gaussian:
        w = np.exp(-np.pi * d ** 2 / n)
    else:
        if alpha is None or alpha < 0:
            raise ValueError("alpha must be >= 0 unless gaussian=True")
        w = (1.0 + d) ** (-float(alpha))
    return rng.complex_normal((n, n)) * w


def weighted_fw_operator(alpha: float | None, n: int, rng: RngStream, gaussian: bool = False) -> np.ndarray:
    return spreading_to_operator(weighted_fw_field(alpha, n, rng, gaussian))


def random_operator(n: int, rng: RngStream) -> np.ndarray:
    F = rng.complex_normal((n, n))
    return F / np.linalg.norm(F)


def add_noise(F, snr_db: float, rng: RngStream) -> np.ndarray:
    """F + sigma E with ||E||_F = 1 and sigma = ||F||_F 10^(-snr_db / 20)."""
    F = as_operator(F)
    if math.isinf(snr_db) and snr_db > 0:
        return F.copy()
    ref = np.linalg.norm(F)
    if ref == 0:
        raise ValueError("cannot set an SNR relative to the zero operator")
    E = rng.complex_normal(F.shape)
    E /= np.linalg.norm(E)
    return F + ref * 10.0 ** (-snr_db / 20.0) * E


# analysis windows

def gaussian_rank1_window(n: int) -> OperatorWindow:
    return OperatorWindow.rank_one(gaussian_window(n))


def multi_gaussian_window(n: int, rank: int, rng: RngStream, spread: float = 3.0) -> OperatorWindow:
    """Projection onto the span of ``rank`` distinct, randomly TF-shifted Gaussians."""
    g = gaussian_window(n)
    shifts: list[tuple[int, int]] = []
    while len(shifts) < rank:
        z = tuple(int(v) % n for v in np.rint(spread * rng.standard_normal(2)))
        if z not in shifts:
            shifts.append(z)
    mix = rng.complex_normal((rank, rank)) + np.eye(rank)
    return OperatorWindow.projection(mix @ np.array([tf_shift(g, z) for z in shifts]))


def eigenfunction_window(F, rank: int) -> OperatorWindow:
    """Projection onto the ``rank`` leading left singular vectors of F (eigenvectors if F is normal)."""
    u, _, _ = np.linalg.svd(as_operator(F))
    return OperatorWindow.projection(u[:, :rank].T)


def unitary_window(n: int, rng: RngStream) -> OperatorWindow:
    """Rank-N window from a random unitary's columns paired with themselves (the identity)."""
    q, r = np.linalg.qr(rng.complex_normal((n, n)))
    q = q * (np.diag(r) / np.abs(np.diag(r)))[None, :]
    return OperatorWindow(q.T, q.T)


def spread_full_rank_window(n: int, width: float = 1.0, decay: float = 2.0) -> OperatorWindow:
    """Full-rank, TF-localized window sum_m c_m u_m (x) u_m.

    u_m are the singular vectors of the Gaussian-spreading operator (Hermite-like
    on Z_N) and c_m = (1 + m)^-decay, normalized to unit l2 norm. Every c_m is far
    above machine precision, so the window has numerical rank N.
    """
    if decay < 0:
        raise ValueError("decay must be nonnegative")
    H = spreading_to_operator(gaussian_spreading(n, width))
    u, _, _ = np.linalg.svd(H)
    c = (1.0 + np.arange(n)) ** (-float(decay))
    c /= np.linalg.norm(c)
    return OperatorWindow((u * c).T, u.T.copy())
