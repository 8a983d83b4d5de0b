"""Finite Weyl-Heisenberg machinery on the cyclic group Z_N.

Signals are 1-D complex numpy arrays of length N. A time-frequency shift is
``pi(x, w) = M_w T_x`` with ``(T_x f)[n] = f[n - x]`` and
``(M_w f)[n] = exp(2 pi i w n / N) f[n]``; indices are taken mod N. Inner
products are linear in the first slot and conjugate-linear in the second.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import DimensionMismatch
from .kernels import tf_atoms as _tf_atoms


class LatticePoint(NamedTuple):
    x: int
    w: int


@lru_cache(maxsize=64)
def twiddle(n: int) -> np.ndarray:
    """exp(2 pi i k / n) for k = 0..n-1 (read-only, shared)."""
    t = np.exp(2j * np.pi * np.arange(n) / n)
    t.setflags(write=False)
    return t


def as_signal(f, n: int | None = None) -> np.ndarray:
    f = np.asarray(f, dtype=np.complex128)
    if f.ndim != 1:
        raise DimensionMismatch(f"signal must be 1-D, got shape {f.shape}")
    if n is not None and f.shape[0] != n:
        raise DimensionMismatch(f"signal length {f.shape[0]} != {n}")
    if not np.all(np.isfinite(f)):
        raise ValueError("signal has non-finite entries")
    return f


@dataclass(frozen=True)
class Lattice:
    """Separable lattice a Z_N x b Z_N, points ordered x-major."""

    n: int
    a: int
    b: int
    xs: np.ndarray = field(init=False, repr=False, compare=False)
    ws: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 1 or self.a < 1 or self.b < 1:
            raise ValueError("lattice parameters must be positive")
        if self.n % self.a or self.n % self.b:
            raise ValueError(f"a={self.a} and b={self.b} must divide n={self.n}")
        jj, kk = np.meshgrid(np.arange(self.n // self.a), np.arange(self.n // self.b), indexing="ij")
        xs = (jj.ravel() * self.a).astype(np.int64)
        ws = (kk.ravel() * self.b).astype(np.int64)
        xs.setflags(write=False)
        ws.setflags(write=False)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ws", ws)

    @classmethod
    def full(cls, n: int) -> "Lattice":
        return cls(n, 1, 1)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n // self.a, self.n // self.b)

    def __len__(self) -> int:
        return self.xs.shape[0]

    @property
    def points(self) -> list[LatticePoint]:
        return [LatticePoint(int(x), int(w)) for x, w in zip(self.xs, self.ws)]

    def index(self, point) -> int:
        x, w = point
        if x % self.a or w % self.b:
            raise KeyError(f"{tuple(point)} is not on the lattice")
        return (x % self.n // self.a) * (self.n // self.b) + (w % self.n // self.b)

    def distances_to_origin(self) -> np.ndarray:
        return wrapped_distance((self.xs, self.ws), (0, 0), self.n)


@dataclass(frozen=True)
class Weight:
    """Weight on Z_N x Z_N: trivial, polynomial (1 + |z|)^s, or a custom table."""

    kind: str = "trivial"
    s: float = 0.0
    table: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("trivial", "polynomial", "custom"):
            raise ValueError(f"unknown weight kind {self.kind!r}")
        if self.s < 0:
            raise ValueError("weight exponent must be nonnegative")
        if self.kind == "custom":
            if self.table is None or np.any(np.asarray(self.table) <= 0):
                raise ValueError("custom weight table must be strictly positive")

    @classmethod
    def polynomial(cls, s: float) -> "Weight":
        return cls("polynomial", float(s))

    def __call__(self, xs, ws, n: int) -> np.ndarray:
        xs = np.asarray(xs)
        if self.kind == "trivial":
            return np.ones(xs.shape)
        if self.kind == "polynomial":
            return (1.0 + wrapped_distance((xs, ws), (0, 0), n)) ** self.s
        return np.asarray(self.table, dtype=float)[np.asarray(xs) % n, np.asarray(ws) % n]


def translate(f, x: int) -> np.ndarray:
    f = as_signal(f)
    return np.roll(f, int(x) % f.shape[0])


def modulate(f, w: int) -> np.ndarray:
    f = as_signal(f)
    n = f.shape[0]
    return twiddle(n)[(int(w) % n) * np.arange(n) % n] * f


def tf_shift(f, lam) -> np.ndarray:
    x, w = lam
    return modulate(translate(f, x), w)


def tf_shift_matrix(lam, n: int) -> np.ndarray:
    """Dense N x N matrix of pi(lam)."""
    x, w = int(lam[0]) % n, int(lam[1]) % n
    mat = np.zeros((n, n), dtype=np.complex128)
    rows = np.arange(n)
    mat[rows, (rows - x) % n] = twiddle(n)[(w * rows) % n]
    return mat


def tf_shift_phase(lam, mu, n: int) -> complex:
    """c with pi(lam) pi(mu) = c * pi(lam + mu)."""
    return complex(twiddle(n)[(-int(lam[0]) * int(mu[1])) % n])


def tf_atoms(windows, lattice: Lattice) -> np.ndarray:
    """All shifted windows: ``out[:, j, m] = pi(lattice point j) windows[m]``.

    ``windows`` is (r, N) or a single length-N signal (r = 1). Returns (N, L, r).
    """
    windows = np.atleast_2d(np.asarray(windows, dtype=np.complex128))
    if windows.shape[1] != lattice.n:
        raise DimensionMismatch(f"window length {windows.shape[1]} != lattice n={lattice.n}")
    return _tf_atoms(np.ascontiguousarray(windows), lattice.xs, lattice.ws, twiddle(lattice.n))


def stft(f, g, lattice: Lattice | None = None) -> np.ndarray:
    """V_g f(x, w) = <f, pi(x, w) g>, as a grid-shaped array.

    Full grid gives shape (N, N) indexed [x, w]; a lattice gives its
    ``lattice.shape`` with entry [j, k] at the point (j a, k b).
    """
    f = as_signal(f)
    g = as_signal(g)
    n = f.shape[0]
    if g.shape[0] != n:
        raise DimensionMismatch(f"f has length {n}, g has length {g.shape[0]}")
    step_x, step_w = (1, 1) if lattice is None else (lattice.a, lattice.b)
    if lattice is not None and lattice.n != n:
        raise DimensionMismatch(f"lattice n={lattice.n} != signal length {n}")
    xs = np.arange(0, n, step_x)
    idx = (np.arange(n)[None, :] - xs[:, None]) % n
    prod = f[None, :] * np.conj(g[idx])
    full = np.fft.fft(prod, axis=1)
    return full[:, ::step_w]


def gaussian_window(n: int) -> np.ndarray:
    """Periodized Gaussian centered at n/2, unit l2 norm."""
    if n < 2:
        raise ValueError("gaussian_window needs n >= 2")
    t = np.arange(n) - n / 2
    g = sum(np.exp(-np.pi * (t + k * n) ** 2 / n) for k in range(-3, 4))
    return (g / np.linalg.norm(g)).astype(np.complex128)


def twisted_convolution(eta, other) -> np.ndarray:
    """(eta # G)(lam) = sum_z eta(z) G(lam - z) exp(-2 pi i z_x (lam - z)_w / N).

    Both inputs are full-grid fields of shape (N, N) indexed [x, w]. With this
    phase, spreading-domain products realize operator composition.
    """
    eta = np.asarray(eta, dtype=np.complex128)
    other = np.asarray(other, dtype=np.complex128)
    if eta.ndim != 2 or eta.shape[0] != eta.shape[1] or other.shape != eta.shape:
        raise DimensionMismatch(f"fields must share a square grid, got {eta.shape} and {other.shape}")
    n = eta.shape[0]
    tw = twiddle(n)
    k = np.arange(n)
    other_hat = np.fft.fft(other, axis=1)
    out = np.zeros((n, n), dtype=np.complex128)
    for p in range(n):
        # fold the z_x z_w part of the phase into eta, convolve along w via FFT
        row_hat = np.fft.fft(eta[p] * tw[(p * k) % n])
        conv = np.fft.ifft(row_hat[None, :] * np.roll(other_hat, p, axis=0), axis=1)
        out += conv * tw[(-p * k) % n][None, :]
    return out


def wrapped_distance(lam, mu, n: int):
    """Euclidean norm of the componentwise torus distance; broadcasts over arrays."""
    dx = np.abs(np.asarray(lam[0]) - np.asarray(mu[0])) % n
    dw = np.abs(np.asarray(lam[1]) - np.asarray(mu[1])) % n
    dx = np.minimum(dx, n - dx)
    dw = np.minimum(dw, n - dw)
    d = np.hypot(dx, dw)
    return float(d) if np.ndim(d) == 0 else d
