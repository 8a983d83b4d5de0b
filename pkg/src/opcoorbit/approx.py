"""Greedy best-K approximation, error metrics and sparsity quasi-norms."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateFit, NotMonotone, ZeroReference
from .finite_tf import Lattice, Weight
from .hs_ops import CoefficientField, FrameSystem, _synthesis_factors, as_operator
from .kernels import error_sweep
from .rng import RngStream

P_GRID = (0.25, 0.5, 1.0, 1.5)
FIT_FLOOR = 1e-7


@dataclass(frozen=True)
class RankedCoefficients:
    order: np.ndarray
    norms: np.ndarray

    def top(self, k: int) -> np.ndarray:
        return self.order[:k]


def rank_coefficients(coeffs) -> RankedCoefficients:
    """Sort coefficient HS norms descending; ties keep lattice (x-major) order."""
    norms = coeffs.hs_norms() if isinstance(coeffs, CoefficientField) else np.asarray(coeffs, dtype=float)
    order = np.argsort(-norms, kind="stable")
    return RankedCoefficients(order, norms[order])


def app_err(F, F_hat) -> float:
    ref = np.linalg.norm(F)
    if ref == 0:
        raise ZeroReference("relative error against the zero operator")
    return float(np.linalg.norm(np.asarray(F) - np.asarray(F_hat)) / ref)


def best_k_reconstruct(F, fs: FrameSystem, k: int, coeffs: CoefficientField | None = None):
    """Keep the K largest coefficients and synthesize with the canonical dual.

    Returns (F_hat, indices of the kept lattice points).
    """
    n_pts = len(fs.lattice)
    if not 0 <= k <= n_pts:
        raise ValueError(f"K={k} outside [0, {n_pts}]")
    if coeffs is None:
        coeffs = fs.analyze(F)
    idx = rank_coefficients(coeffs).top(k)
    if k == 0:
        return np.zeros((fs.lattice.n,) * 2, dtype=np.complex128), idx
    return fs.synthesize(coeffs, idx), idx


def greedy_error_curve(F, fs: FrameSystem, reference=None, coeffs: CoefficientField | None = None):
    """Relative errors ||reference - F_hat_K|| / ||reference|| for every K = 0..|Lambda|.

    ``F`` is what gets analyzed; ``reference`` (default ``F``) is what the
    partial reconstructions are compared against. Returns (errors, ranked).
    """
    F = as_operator(F, fs.lattice.n)
    reference = F if reference is None else as_operator(reference, fs.lattice.n)
    ref_norm = np.linalg.norm(reference)
    if ref_norm == 0:
        raise ZeroReference("relative error against the zero operator")
    if coeffs is None:
        coeffs = fs.analyze(F)
    ranked = rank_coefficients(coeffs)
    h = _synthesis_factors(coeffs, fs.dual_window)
    us = np.ascontiguousarray(fs.dual_atoms[:, ranked.order, :].transpose(1, 0, 2))
    vs = np.ascontiguousarray(h[:, ranked.order, :].transpose(1, 0, 2))
    return error_sweep(np.ascontiguousarray(reference), us, vs) / ref_norm, ranked


def white_noise_error(F, F_hat, trials: int, rng: RngStream) -> float:
    """Mean over Gaussian probes of ||(F - F_hat) eta|| / ||F eta||."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    F = as_operator(F)
    probes = rng.complex_normal((F.shape[0], trials))
    num = np.linalg.norm((F - np.asarray(F_hat)) @ probes, axis=0)
    den = np.linalg.norm(F @ probes, axis=0)
    ok = den > 0
    if not np.any(ok):
        raise ZeroReference("F annihilated every probe")
    return float(np.mean(num[ok] / den[ok]))


def white_noise_curve(F, fs: FrameSystem, ks, trials: int, rng: RngStream, reference=None,
                      coeffs: CoefficientField | None = None) -> np.ndarray:
    """White-noise probe error at each K in ``ks`` for the greedy reconstructions."""
    F = as_operator(F, fs.lattice.n)
    reference = F if reference is None else as_operator(reference)
    if coeffs is None:
        coeffs = fs.analyze(F)
    order = rank_coefficients(coeffs).order
    h = _synthesis_factors(coeffs, fs.dual_window)
    probes = rng.complex_normal((fs.lattice.n, trials))
    target = reference @ probes
    den = np.linalg.norm(target, axis=0)
    ok = den > 0
    if not np.any(ok):
        raise ZeroReference("reference annihilated every probe")
    approx = np.zeros_like(target)
    out = []
    done = 0
    for k in sorted(int(k) for k in ks):
        sel = order[done:k]
        if sel.size:
            a = fs.dual_atoms[:, sel, :].reshape(fs.lattice.n, -1)
            b = h[:, sel, :].reshape(fs.lattice.n, -1)
            approx += a @ (b.conj().T @ probes)
        done = max(done, k)
        out.append(np.mean(np.linalg.norm(target - approx, axis=0)[ok] / den[ok]))
    result = dict(zip(sorted(int(k) for k in ks), out))
    return np.array([result[int(k)] for k in ks])


def sigma_tail(ranked) -> np.ndarray:
    """sigma_m = l2 norm of a_{m+1}, a_{m+2}, ... for m = 0..len(a)."""
    a = ranked.norms if isinstance(ranked, RankedCoefficients) else np.asarray(ranked, dtype=float)
    sq = np.concatenate([np.cumsum((a ** 2)[::-1])[::-1], [0.0]])
    return np.sqrt(np.maximum(sq, 0.0))


def lp_quasi_norm(norms, p: float, weight: Weight | None = None, lattice: Lattice | None = None) -> float:
    """(sum (norm_lam * weight(lam))^p)^(1/p); ``norms`` in lattice order when weighted."""
    if p <= 0:
        raise ValueError("p must be positive")
    v = np.abs(np.asarray(norms, dtype=float))
    if weight is not None and weight.kind != "trivial":
        if lattice is None:
            raise ValueError("a lattice is required to evaluate a nontrivial weight")
        v = v * weight(lattice.xs, lattice.ws, lattice.n)
    if np.isinf(p):
        return float(v.max(initial=0.0))
    vmax = v.max(initial=0.0)
    if vmax == 0:
        return 0.0
    return float(vmax * np.sum((v / vmax) ** p) ** (1.0 / p))


def approx_space_norm(sigma, alpha: float, p: float) -> float:
    """(sum_{m>=1} (m^alpha sigma_{m-1})^p / m)^(1/p); sup_m m^alpha sigma_{m-1} for p = inf."""
    sigma = np.asarray(sigma, dtype=float)
    m = np.arange(1, sigma.size + 1, dtype=float)
    terms = m ** alpha * sigma
    if np.isinf(p):
        return float(terms.max(initial=0.0))
    return float(np.sum(terms ** p / m) ** (1.0 / p))


def stechkin_check(a, p: float) -> tuple[float, float]:
    """Two-sided comparison of the tail-based quasi-norm with ||a||_p.

    With alpha = 1/p - 1/2 and Q = (sum_m (m^alpha sigma_{m-1}(a))^p / m)^(1/p),
    returns (||a||_p / Q, Q / ||a||_p); both stay below a constant C(p).
    """
    if not 0 < p < 2:
        raise ValueError("p must lie in (0, 2)")
    a = np.asarray(a, dtype=float)
    if np.any(a < 0) or np.any(np.diff(a) > 1e-12):
        raise NotMonotone("sequence must be nonnegative and non-increasing")
    if a.size == 0 or a[0] == 0:
        raise ZeroReference("zero sequence")
    # both quantities are 1-homogeneous; normalizing avoids underflow
    a = a / a[0]
    alpha = 1.0 / p - 0.5
    q = approx_space_norm(sigma_tail(a)[:-1], alpha, p)
    ap = lp_quasi_norm(a, p)
    return ap / q, q / ap


STRESS_FAMILIES = ("geometric", "power", "spike", "flat")


def stress_sequence(family: str, length: int, p: float, ratio: float = 0.8, flat_len: int = 16) -> np.ndarray:
    """Non-increasing test sequences for stechkin_check.

    geometric: ratio**j; power: j**(-2/p), which is l^p summable with room to
    spare; spike: a single 1; flat: ``flat_len`` ones, then zeros.
    """
    j = np.arange(length, dtype=float)
    if family == "geometric":
        return ratio ** j
    if family == "power":
        return (j + 1) ** (-2.0 / p)
    if family == "spike":
        return (j == 0).astype(float)
    if family == "flat":
        return (j < flat_len).astype(float)
    raise ValueError(f"unknown stress family {family!r}")


def rate_check(F, fs: FrameSystem, p: float, curve=None) -> float:
    """sup_m (m+1)^alpha AppErr(m) ||F|| / ||a||_p for the greedy reconstructions."""
    if not 0 < p < 2:
        raise ValueError("p must lie in (0, 2)")
    if curve is None:
        curve = greedy_error_curve(F, fs)
    errs, ranked = curve
    alpha = 1.0 / p - 0.5
    m = np.arange(errs.size, dtype=float)
    return float(np.max((m + 1) ** alpha * errs) * np.linalg.norm(F) / lp_quasi_norm(ranked.norms, p))


def fit_error_decay(ks, errs, floor: float = FIT_FLOOR) -> tuple[float, float]:
    """Slope and r2 of log err against log K, using only K > 0 with err > floor."""
    ks = np.asarray(ks, dtype=float)
    errs = np.asarray(errs, dtype=float)
    use = (ks > 0) & (errs > floor)
    if use.sum() < 3:
        raise DegenerateFit("need at least 3 points above the fit floor")
    x, y = np.log(ks[use]), np.log(errs[use])
    slope, intercept = np.polyfit(x, y, 1)
    ss_res = np.sum((y - (intercept + slope * x)) ** 2)
    ss_tot = np.sum((y - y.mean()) ** 2)
    return float(slope), float(1.0 - ss_res / ss_tot) if ss_tot > 0 else 1.0


@dataclass
class ApproxReport:
    ks: list
    app_err: list
    sigma_tail: list
    wne: list | None = None
    quasi_norms: dict = field(default_factory=dict)
    fit: dict = field(default_factory=dict)
    selected: dict = field(default_factory=dict)


def approx_report(F, fs: FrameSystem, ks, p_grid=P_GRID, trials: int = 0, rng: RngStream | None = None,
                  reference=None, keep_selected: bool = False) -> ApproxReport:
    coeffs = fs.analyze(F)
    errs, ranked = greedy_error_curve(F, fs, reference, coeffs)
    sig = sigma_tail(ranked)
    ks = [int(k) for k in ks]
    report = ApproxReport(ks=ks, app_err=[float(errs[k]) for k in ks], sigma_tail=[float(sig[k]) for k in ks])
    if trials:
        if rng is None:
            raise ValueError("white-noise probes need an RngStream")
        report.wne = [float(v) for v in white_noise_curve(F, fs, ks, trials, rng, reference, coeffs)]
    for p in p_grid:
        report.quasi_norms[f"lp_{p:g}"] = lp_quasi_norm(ranked.norms, p)
        report.quasi_norms[f"approx_{p:g}"] = approx_space_norm(sig[:-1], 1.0 / p - 0.5, p)
    try:
        rate, r2 = fit_error_decay(np.arange(errs.size), errs)
        report.fit = {"rate": rate, "r2": r2}
    except DegenerateFit:
        report.fit = {"rate": None, "r2": None}
    if keep_selected:
        report.selected = {k: [int(i) for i in ranked.order[:k]] for k in ks}
    return report
