"""Platform-independent random stream: xoshiro256** seeded through splitmix64.

Uniform doubles use the top 53 bits of each output word; Gaussian variates
come from Box-Muller on consecutive uniform pairs. Given the seed, every
draw is bit-identical across platforms and across kernel backends.
"""

from __future__ import annotations

import math

import numpy as np

from .kernels import xoshiro_fill

_MASK = (1 << 64) - 1


def splitmix64(x: int) -> tuple[int, int]:
    """One splitmix64 step: returns (new_state, output)."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return x, z ^ (z >> 31)


class RngStream:
    """Single-owner random stream. Use :meth:`spawn` for independent substreams."""

    algorithm = "xoshiro256**/splitmix64"

    def __init__(self, seed: int):
        self.seed = int(seed) & _MASK
        x = self.seed
        words = []
        for _ in range(4):
            x, out = splitmix64(x)
            words.append(out)
        self._state = np.array(words, dtype=np.uint64)

    def __repr__(self):
        return f"RngStream(seed={self.seed})"

    def spawn(self, index: int) -> "RngStream":
        """Independent stream for job ``index`` (>= 1): seed XOR index, re-expanded."""
        if index < 1:
            raise ValueError("stream index must be >= 1")
        return RngStream(self.seed ^ int(index))

    def next_uint64(self, size: int) -> np.ndarray:
        out = np.empty(int(size), dtype=np.uint64)
        if size:
            xoshiro_fill(self._state, out)
        return out

    def uniform(self, size: int) -> np.ndarray:
        """Doubles in [0, 1)."""
        return (self.next_uint64(size) >> np.uint64(11)).astype(np.float64) * 2.0 ** -53

    def standard_normal(self, size: int) -> np.ndarray:
        size = int(size)
        pairs = (size + 1) // 2
        u = self.uniform(2 * pairs)
        radius = np.sqrt(-2.0 * np.log1p(-u[0::2]))
        theta = 2.0 * math.pi * u[1::2]
        z = np.empty(2 * pairs)
        z[0::2] = radius * np.cos(theta)
        z[1::2] = radius * np.sin(theta)
        return z[:size]

    def complex_normal(self, shape) -> np.ndarray:
        """Circular complex Gaussian with E|z|^2 = 1."""
        shape = (shape,) if np.isscalar(shape) else tuple(shape)
        count = int(np.prod(shape))
        z = self.standard_normal(2 * count)
        return ((z[0::2] + 1j * z[1::2]) / math.sqrt(2.0)).reshape(shape)

    def integers(self, high: int, size: int) -> np.ndarray:
        """Integers in [0, high)."""
        return np.minimum(np.floor(self.uniform(size) * high).astype(np.int64), high - 1)
