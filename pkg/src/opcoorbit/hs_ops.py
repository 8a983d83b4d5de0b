"""Operator STFT over a lattice, frame operators, canonical duals, localization.

Operators on C^N are plain (N, N) complex arrays with the Frobenius inner
product ``hs_inner(F, G) = trace(G^H F)``. A window
``Phi = sum_m phi_m (x) psi_m`` acts as ``Phi h = sum_m <h, psi_m> phi_m``;
it is stored factorized as two (r, N) arrays.

The analysis coefficient at a lattice point is ``Phi^* pi(lam)^* F``, which
factorizes as ``sum_m psi_m (x) g_{lam,m}`` with ``g_{lam,m} = F^H pi(lam) phi_m``,
so only the ``g`` vectors are stored. By the lifting property the HS-level
frame operator is left multiplication by ``S0 = sum_lam pi(lam) Phi Phi^* pi(lam)^*``,
an N x N matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateFit, DimensionMismatch, NotAFrame
from .finite_tf import Lattice, tf_atoms, tf_shift_matrix, wrapped_distance

NOT_A_FRAME_RATIO = 1e-10


def as_operator(F, n: int | None = None) -> np.ndarray:
    F = np.asarray(F, dtype=np.complex128)
    if F.ndim != 2 or F.shape[0] != F.shape[1]:
        raise DimensionMismatch(f"operator must be square, got shape {F.shape}")
    if n is not None and F.shape[0] != n:
        raise DimensionMismatch(f"operator dimension {F.shape[0]} != {n}")
    return F


def hs_inner(F, G) -> complex:
    return complex(np.vdot(G, F))


def hs_norm(F) -> float:
    return float(np.linalg.norm(F))


def is_self_adjoint(F, tol: float = 1e-10) -> bool:
    F = as_operator(F)
    return np.linalg.norm(F - F.conj().T) <= tol * max(np.linalg.norm(F), np.finfo(float).tiny)


def is_psd(F, tol: float = 1e-10) -> bool:
    F = as_operator(F)
    if not is_self_adjoint(F, tol):
        return False
    lo = np.linalg.eigvalsh((F + F.conj().T) / 2)[0]
    return lo >= -tol * np.linalg.norm(F)


@dataclass(frozen=True, eq=False)
class OperatorWindow:
    """Finite-rank window ``sum_m phi_m (x) psi_m``; ``phis`` and ``psis`` are (r, N)."""

    phis: np.ndarray
    psis: np.ndarray

    def __post_init__(self):
        phis = np.atleast_2d(np.asarray(self.phis, dtype=np.complex128))
        psis = np.atleast_2d(np.asarray(self.psis, dtype=np.complex128))
        if phis.shape != psis.shape or phis.shape[0] < 1:
            raise DimensionMismatch(f"phis {phis.shape} and psis {psis.shape} must agree, r >= 1")
        object.__setattr__(self, "phis", np.ascontiguousarray(phis))
        object.__setattr__(self, "psis", np.ascontiguousarray(psis))

    @property
    def rank(self) -> int:
        return self.phis.shape[0]

    @property
    def n(self) -> int:
        return self.phis.shape[1]

    @classmethod
    def rank_one(cls, g, h=None) -> "OperatorWindow":
        """g (x) h; ``h`` defaults to ``g`` (a projector when ||g|| = 1)."""
        return cls(np.asarray(g)[None, :], np.asarray(g if h is None else h)[None, :])

    @classmethod
    def projection(cls, vectors) -> "OperatorWindow":
        """Orthogonal projection onto the span of the rows of ``vectors``."""
        q, _ = np.linalg.qr(np.atleast_2d(np.asarray(vectors, dtype=np.complex128)).T)
        return cls(q.T, q.T)

    @classmethod
    def from_dense(cls, mat, tol: float = 1e-12) -> "OperatorWindow":
        """Factorize a matrix through its SVD, dropping singular values below tol * s_max."""
        u, s, vh = np.linalg.svd(np.asarray(mat, dtype=np.complex128))
        keep = s > tol * s[0]
        return cls((u[:, keep] * s[keep]).T, vh[keep].conj())

    def densify(self) -> np.ndarray:
        return self.phis.T @ self.psis.conj()

    def psi_factor(self) -> np.ndarray:
        """Upper-triangular R with Psi_s = Q R (Psi_s has the psis as columns)."""
        return np.linalg.qr(self.psis.T, mode="r")

    def numerical_rank(self, tol: float | None = None) -> int:
        s = np.linalg.svd(self.densify(), compute_uv=False)
        if tol is None:
            tol = self.n * np.finfo(float).eps
        return int(np.sum(s > tol * s[0]))


@dataclass(frozen=True, eq=False)
class CoefficientField:
    """Sampled operator STFT; ``g`` has shape (N, L, r) with g[:, j, m] = g_{lam_j, m}."""

    lattice: Lattice
    g: np.ndarray
    psis: np.ndarray

    @property
    def rank(self) -> int:
        return self.g.shape[2]

    def block(self, j: int) -> np.ndarray:
        """The r coefficient vectors at lattice index j, shape (r, N)."""
        return self.g[:, j, :].T

    def densify(self, j: int) -> np.ndarray:
        return self.psis.T @ self.g[:, j, :].conj().T

    def hs_norms(self) -> np.ndarray:
        """HS norm of every coefficient operator, in lattice order."""
        r_fac = np.linalg.qr(self.psis.T, mode="r")
        tg = np.einsum("nlk,mk->nlm", self.g, r_fac.conj(), optimize=True)
        return np.sqrt(np.einsum("nlm,nlm->l", tg.real, tg.real) + np.einsum("nlm,nlm->l", tg.imag, tg.imag))

    def restrict(self, indices) -> "CoefficientField":
        """Zero every block outside ``indices``."""
        g = np.zeros_like(self.g)
        idx = np.asarray(indices, dtype=np.int64)
        g[:, idx, :] = self.g[:, idx, :]
        return CoefficientField(self.lattice, g, self.psis)


def _check(window: OperatorWindow, lattice: Lattice):
    if window.n != lattice.n:
        raise DimensionMismatch(f"window dimension {window.n} != lattice n={lattice.n}")


def op_stft_analyze(F, window: OperatorWindow, lattice: Lattice, atoms=None) -> CoefficientField:
    """Coefficients ``Phi^* pi(lam)^* F`` at every lattice point, factorized."""
    _check(window, lattice)
    F = as_operator(F, lattice.n)
    if atoms is None:
        atoms = tf_atoms(window.phis, lattice)
    n, n_pts, r = atoms.shape
    g = (F.conj().T @ atoms.reshape(n, n_pts * r)).reshape(n, n_pts, r)
    return CoefficientField(lattice, g, window.psis)


def _synthesis_factors(coeffs: CoefficientField, window: OperatorWindow):
    # Psi G_lam = sum_m phi'_m (sum_k conj(M_mk) g_k)^H with M_mk = <psi_k, psi'_m>
    cross = window.psis.conj() @ coeffs.psis.T
    return np.einsum("nlk,mk->nlm", coeffs.g, cross.conj(), optimize=True)


def op_synthesize(coeffs: CoefficientField, window: OperatorWindow, lattice: Lattice,
                  atoms=None, indices=None, method: str = "factorized") -> np.ndarray:
    """``sum_lam pi(lam) Psi G_lam`` over the lattice (or over ``indices`` only)."""
    _check(window, lattice)
    if coeffs.lattice != lattice:
        raise DimensionMismatch("coefficient lattice does not match synthesis lattice")
    n = lattice.n
    sel = np.arange(len(lattice)) if indices is None else np.asarray(indices, dtype=np.int64)
    if method == "dense":
        psi_dense = window.densify()
        out = np.zeros((n, n), dtype=np.complex128)
        for j in sel:
            lam = (lattice.xs[j], lattice.ws[j])
            out += tf_shift_matrix(lam, n) @ psi_dense @ coeffs.densify(j)
        return out
    if method != "factorized":
        raise ValueError(f"unknown method {method!r}")
    if atoms is None:
        atoms = tf_atoms(window.phis, lattice)
    h = _synthesis_factors(coeffs, window)
    a = atoms[:, sel, :].reshape(n, -1)
    b = h[:, sel, :].reshape(n, -1)
    return a @ b.conj().T


def frame_operator(window: OperatorWindow, lattice: Lattice, atoms=None) -> np.ndarray:
    """S0 = sum_lam pi(lam) Phi Phi^* pi(lam)^*, Hermitian PSD."""
    _check(window, lattice)
    if atoms is None:
        atoms = tf_atoms(window.phis, lattice)
    n = lattice.n
    # Phi Phi^* = Phi_s R^H R Phi_s^H, so S0 = B B^H with B_lam = A_lam R^H
    b = np.einsum("nlk,mk->nlm", atoms, window.psi_factor().conj(), optimize=True).reshape(n, -1)
    s0 = b @ b.conj().T
    return (s0 + s0.conj().T) / 2


def frame_bounds(s0) -> tuple[float, float]:
    """Extreme eigenvalues of S0; raises NotAFrame when A <= 1e-10 B."""
    s0 = as_operator(s0)
    ev = np.linalg.eigvalsh((s0 + s0.conj().T) / 2)
    lower, upper = float(ev[0]), float(ev[-1])
    if upper <= 0 or lower <= NOT_A_FRAME_RATIO * upper:
        raise NotAFrame(f"frame operator is singular: A={lower:.3e}, B={upper:.3e}", lower, upper)
    return lower, upper


def _inverse_frame_operator(s0) -> np.ndarray:
    s0 = as_operator(s0)
    w, v = np.linalg.eigh((s0 + s0.conj().T) / 2)
    cutoff = s0.shape[0] * np.finfo(float).eps * w[-1]
    if w[0] < cutoff or w[0] <= NOT_A_FRAME_RATIO * w[-1]:
        raise NotAFrame(f"frame operator is singular: A={w[0]:.3e}, B={w[-1]:.3e}", w[0], w[-1])
    return (v / w) @ v.conj().T


def canonical_dual_window(window: OperatorWindow, lattice: Lattice, s0=None) -> OperatorWindow:
    """S0^{-1} Phi in factorized form: phi_m -> S0^{-1} phi_m, psi_m unchanged."""
    if s0 is None:
        s0 = frame_operator(window, lattice)
    inv = _inverse_frame_operator(s0)
    return OperatorWindow((inv @ window.phis.T).T, window.psis.copy())


@dataclass(frozen=True, eq=False)
class FrameSystem:
    """Analysis window, lattice, frame operator, canonical dual and bounds."""

    window: OperatorWindow
    lattice: Lattice
    frame_op: np.ndarray
    dual_window: OperatorWindow
    bounds: tuple[float, float]
    atoms: np.ndarray = field(repr=False)
    dual_atoms: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, window: OperatorWindow, lattice: Lattice) -> "FrameSystem":
        _check(window, lattice)
        atoms = tf_atoms(window.phis, lattice)
        s0 = frame_operator(window, lattice, atoms)
        bounds = frame_bounds(s0)
        dual = canonical_dual_window(window, lattice, s0)
        return cls(window, lattice, s0, dual, bounds, atoms, tf_atoms(dual.phis, lattice))

    def analyze(self, F) -> CoefficientField:
        return op_stft_analyze(F, self.window, self.lattice, self.atoms)

    def synthesize(self, coeffs: CoefficientField, indices=None) -> np.ndarray:
        return op_synthesize(coeffs, self.dual_window, self.lattice, self.dual_atoms, indices)

    def dual_synthesis_norm(self) -> float:
        """Operator norm of the synthesis map of the canonical dual, 1/sqrt(A)."""
        return 1.0 / np.sqrt(self.bounds[0])


def gram_localization(window: OperatorWindow, lattice: Lattice, chunk_bytes: int = 1 << 26) -> np.ndarray:
    """entry[j, k] = || Psi^* pi(lam_j)^* pi(lam_k) Psi ||_HS."""
    _check(window, lattice)
    atoms = tf_atoms(window.phis, lattice)
    n, n_pts, r = atoms.shape
    # ||Psi_s C Psi_s^H||_F = ||R C R^H||_F with C = A_j^H A_k
    b = np.einsum("nlk,mk->nlm", atoms, window.psi_factor().conj(), optimize=True)
    flat = b.reshape(n, n_pts * r)
    out = np.empty((n_pts, n_pts))
    rows = max(1, chunk_bytes // (16 * r * r * n_pts))
    for start in range(0, n_pts, rows):
        stop = min(start + rows, n_pts)
        blk = (flat[:, start * r:stop * r].conj().T @ flat).reshape(stop - start, r, n_pts, r)
        out[start:stop] = np.sqrt(np.sum(blk.real ** 2 + blk.imag ** 2, axis=(1, 3)))
    return out


def fit_decay_exponent(gram, lattice: Lattice, rel_floor: float = 1e-13) -> tuple[float, float, float]:
    """Fit log entry = log C - s log(1 + |lam - mu|) over off-diagonal pairs.

    Entries at or below ``rel_floor * max`` are treated as zero and excluded.
    Returns (s_hat, C_hat, r2).
    """
    gram = np.asarray(gram, dtype=float)
    n_pts = len(lattice)
    if gram.shape != (n_pts, n_pts):
        raise DimensionMismatch(f"gram shape {gram.shape} does not match lattice size {n_pts}")
    dist = wrapped_distance((lattice.xs[:, None], lattice.ws[:, None]),
                            (lattice.xs[None, :], lattice.ws[None, :]), lattice.n)
    mask = ~np.eye(n_pts, dtype=bool) & (gram > rel_floor * gram.max())
    d = dist[mask]
    if np.unique(np.round(d, 12)).size < 3:
        raise DegenerateFit("fewer than 3 distinct distances among usable pairs")
    x = np.log1p(d)
    y = np.log(gram[mask])
    xm, ym = x.mean(), y.mean()
    slope = np.sum((x - xm) * (y - ym)) / np.sum((x - xm) ** 2)
    intercept = ym - slope * xm
    ss_res = np.sum((y - (intercept + slope * x)) ** 2)
    ss_tot = np.sum((y - ym) ** 2)
    r2 = 1.0 if ss_tot <= 1e-300 else float(1.0 - ss_res / ss_tot)
    return float(-slope), float(np.exp(intercept)), r2


def hs_parseval_check(F, window: OperatorWindow, lattice: Lattice, s0=None) -> tuple[float, float]:
    """(sum of squared coefficient HS norms, trace(F^H S0 F)); equal by the lifting identity."""
    F = as_operator(F, lattice.n)
    lhs = float(np.sum(op_stft_analyze(F, window, lattice).hs_norms() ** 2))
    if s0 is None:
        s0 = frame_operator(window, lattice)
    rhs = float(np.real(np.vdot(F, s0 @ F)))
    return lhs, rhs
