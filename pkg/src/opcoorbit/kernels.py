"""Backend selection for the hot loops.

The compiled extension is used when it imports cleanly; otherwise, or when
the environment variable ``OPCOORBIT_PURE`` is set to a non-empty value other
than ``0``, the pure-Python versions are used. ``BACKEND`` names the choice.
"""

import os

from . import _fallback

if os.environ.get("OPCOORBIT_PURE", "0") not in ("", "0"):
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "compiled"
    except ImportError:
        _impl = _fallback
        BACKEND = "python"

# the compiled sweep only beats BLAS for rank-1 updates (see benchmarks/)
SWEEP_BLAS_RANK = 1

tf_atoms = _impl.tf_atoms
xoshiro_fill = _impl.xoshiro_fill


def error_sweep(start, us, vs):
    """Frobenius norms of start - sum_{i<j} us[i] vs[i]^H for j = 0..L."""
    if us.shape[2] > SWEEP_BLAS_RANK:
        return _fallback.error_sweep(start, us, vs)
    return _impl.error_sweep(start, us, vs)

__all__ = ["BACKEND", "SWEEP_BLAS_RANK", "tf_atoms", "error_sweep", "xoshiro_fill"]
