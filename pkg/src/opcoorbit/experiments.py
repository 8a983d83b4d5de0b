"""Experiment configurations and runners behind the command-line interface.

Every runner takes an :class:`ExperimentConfig`, writes one CSV per curve and
one JSON summary into ``config.output_dir``, and returns an in-memory result
dict for programmatic use. Randomness flows from ``RngStream(seed)`` through
fixed ``spawn`` indices, so a run is fully determined by its config.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import asdict, dataclass
from enum import IntEnum
from pathlib import Path

import numpy as np

from . import __version__
from .approx import (P_GRID, approx_report, fit_error_decay, greedy_error_curve, sigma_tail,
                     white_noise_curve)
from .errors import ConfigError, DegenerateFit
from .finite_tf import Lattice, gaussian_window, stft, wrapped_distance
from .generators import (add_noise, eigenfunction_window, gabor_multiplier, gaussian_rank1_window,
                         gaussian_spreading, mixed_state, multi_gaussian_window, random_operator,
                         spread_full_rank_window, spreading_to_operator, two_blob_mask,
                         unitary_window, weighted_fw_operator)
from .hs_ops import FrameSystem, fit_decay_exponent, gram_localization
from .io import write_csv, write_json, write_report_csv
from .kernels import BACKEND
from .rng import RngStream

WINDOWS = ("gaussian_rank1", "multi_gaussian", "eigenfunctions", "full_rank", "unitary")

# spawn indices; changing them changes every published number
_S_WINDOW = 1
_S_FIELD = 2
_S_NOISE = 3
_S_PROBES = 4
_S_MIXED = 5
_S_RANDOM = 6

DEFAULTS = {
    "underspread": dict(a=2, b=2, k_grid=(20, 30, 100, 500)),
    "denoise": dict(a=4, b=4, snr_db=10.0),
    "scenarios": dict(a=4, b=4, trials=10),
    "decay": dict(a=3, b=3, alpha=tuple(range(1, 10)), k_grid=(10, 20, 50, 100, 200, 500, 1000, 2000)),
    "localize": dict(a=4, b=4),
    "selftest": dict(n=16, a=2, b=2),
}


@dataclass
class ExperimentConfig:
    command: str = "underspread"
    n: int = 144
    a: int = 4
    b: int = 4
    window: str = "gaussian_rank1"
    rank: int = 1
    alpha: tuple = tuple(range(1, 10))
    snr_db: float = 10.0
    k_grid: tuple | None = None
    p_grid: tuple = P_GRID
    seeds: tuple = (0,)
    trials: int = 0
    threads: int = 0
    reproducible: bool = False
    output_dir: str = "opcoorbit_out"

    @classmethod
    def for_command(cls, command: str, **overrides) -> "ExperimentConfig":
        if command not in DEFAULTS:
            raise ConfigError(f"unknown command {command!r}")
        values = {**DEFAULTS[command], **{k: v for k, v in overrides.items() if v is not None}}
        return cls(command=command, **values).validated()

    @property
    def lattice(self) -> Lattice:
        return Lattice(self.n, self.a, self.b)

    def validated(self) -> "ExperimentConfig":
        if self.n < 2:
            raise ConfigError("n must be >= 2")
        if self.a < 1 or self.b < 1 or self.n % self.a or self.n % self.b:
            raise ConfigError(f"a={self.a} and b={self.b} must be positive divisors of n={self.n}")
        if self.window not in WINDOWS:
            raise ConfigError(f"unknown window {self.window!r}; choose from {', '.join(WINDOWS)}")
        if not 1 <= self.rank <= self.n:
            raise ConfigError(f"rank must lie in [1, {self.n}]")
        if self.window == "gaussian_rank1" and self.rank != 1:
            raise ConfigError("gaussian_rank1 window has rank 1")
        size = (self.n // self.a) * (self.n // self.b)
        if self.k_grid is not None:
            ks = tuple(int(k) for k in self.k_grid)
            if not ks or any(k < 0 or k > size for k in ks):
                raise ConfigError(f"k_grid values must lie in [0, {size}]")
            self.k_grid = ks
        if not self.p_grid or any(not p > 0 for p in self.p_grid):
            raise ConfigError("p_grid values must be positive")
        self.p_grid = tuple(float(p) for p in self.p_grid)
        if not self.seeds or any(int(s) < 0 for s in self.seeds):
            raise ConfigError("seeds must be nonnegative integers")
        self.seeds = tuple(int(s) for s in self.seeds)
        if any(float(a) < 0 for a in self.alpha):
            raise ConfigError("alpha values must be nonnegative")
        self.alpha = tuple(self.alpha)
        if math.isnan(self.snr_db):
            raise ConfigError("snr_db must be a number or inf")
        if self.trials < 0 or self.threads < 0:
            raise ConfigError("trials and threads must be nonnegative")
        return self

    def ks(self) -> list[int]:
        """The configured K grid, or every K from 0 to |Lambda|."""
        size = len(self.lattice)
        return list(self.k_grid) if self.k_grid is not None else list(range(size + 1))

    def echo(self) -> dict:
        d = asdict(self)
        d["k_grid"] = list(self.k_grid) if self.k_grid is not None else None
        return d


class ScenarioId(IntEnum):
    """The ten operator/window pairings of the structured-operator comparison."""

    SPREAD_FULL = 1
    SPREAD_R2 = 2
    SPREAD_R1 = 3
    SPREAD_R4 = 4
    SPREAD_R6 = 5
    SPREAD_EIGEN6 = 6
    MIXED_FULL = 7
    MIXED_R2 = 8
    MIXED_R1 = 9
    RANDOM_R1 = 10

    @property
    def operator_kind(self) -> str:
        if self <= 6:
            return "spreading"
        return "mixed" if self <= 9 else "random"

    @property
    def window_spec(self) -> tuple[str, int]:
        return {
            1: ("full_rank", 0), 2: ("multi_gaussian", 2), 3: ("gaussian_rank1", 1),
            4: ("multi_gaussian", 4), 5: ("multi_gaussian", 6), 6: ("eigenfunctions", 6),
            7: ("full_rank", 0), 8: ("multi_gaussian", 2), 9: ("gaussian_rank1", 1),
            10: ("gaussian_rank1", 1),
        }[int(self)]


def build_window(kind: str, n: int, rank: int, rng: RngStream, source=None):
    if kind == "gaussian_rank1":
        return gaussian_rank1_window(n)
    if kind == "multi_gaussian":
        return multi_gaussian_window(n, rank, rng)
    if kind == "eigenfunctions":
        if source is None:
            raise ConfigError("eigenfunction window needs a source operator")
        return eigenfunction_window(source, rank)
    if kind == "full_rank":
        return spread_full_rank_window(n)
    if kind == "unitary":
        return unitary_window(n, rng)
    raise ConfigError(f"unknown window {kind!r}")


@contextmanager
def _blas_limit(config: ExperimentConfig):
    # one BLAS thread per job whenever threading is configured: jobs carry the
    # parallelism, and single-threaded reductions keep outputs byte-stable
    if config.reproducible or config.threads:
        from threadpoolctl import threadpool_limits

        with threadpool_limits(limits=1):
            yield
    else:
        yield


def _run_jobs(config: ExperimentConfig, fn, jobs):
    """Run independent jobs, in parallel when --threads > 1; results keep job order."""
    with _blas_limit(config):
        if config.threads > 1 and len(jobs) > 1:
            with ThreadPoolExecutor(max_workers=config.threads) as pool:
                return list(pool.map(fn, jobs))
        return [fn(j) for j in jobs]


def _out_dir(config: ExperimentConfig) -> Path:
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _summary_header(config: ExperimentConfig) -> dict:
    head = {
        "command": config.command,
        "config": config.echo(),
        "seeds": list(config.seeds),
        "version": f"opcoorbit {__version__}",
        "backend": BACKEND,
        "rng": RngStream.algorithm,
    }
    if not config.reproducible:
        head["created_utc"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    return head


def _report_dict(report) -> dict:
    return {"app_err": dict(zip(report.ks, report.app_err)), "quasi_norms": report.quasi_norms,
            "fit": report.fit}


def cmd_underspread(config: ExperimentConfig) -> dict:
    """Best-K approximation of the Gaussian-spreading operator."""
    out = _out_dir(config)
    lat = config.lattice
    H = spreading_to_operator(gaussian_spreading(config.n))

    def job(seed):
        base = RngStream(seed)
        window = build_window(config.window, config.n, config.rank, base.spawn(_S_WINDOW), source=H)
        fs = FrameSystem.build(window, lat)
        rep = approx_report(H, fs, config.ks(), config.p_grid, config.trials,
                            base.spawn(_S_PROBES) if config.trials else None)
        write_report_csv(out / f"underspread_seed{seed}.csv", rep)
        return rep

    reports = dict(zip(config.seeds, _run_jobs(config, job, list(config.seeds))))
    summary = _summary_header(config)
    summary["coefficients"] = len(lat)
    summary["runs"] = {str(s): _report_dict(r) for s, r in reports.items()}
    write_json(out / "underspread_summary.json", summary)
    return {"coefficients": len(lat), "reports": reports}


def denoise_operator(n: int) -> np.ndarray:
    """Two-blob Gabor multiplier with the Gaussian window."""
    return gabor_multiplier(two_blob_mask(n), gaussian_window(n))


def cmd_denoise(config: ExperimentConfig) -> dict:
    """Greedy approximation of a noisy Gabor multiplier, scored against both versions."""
    out = _out_dir(config)
    lat = config.lattice
    size = len(lat)
    clean_op = denoise_operator(config.n)
    window_rng = RngStream(config.seeds[0]).spawn(_S_WINDOW)
    fs = FrameSystem.build(build_window(config.window, config.n, config.rank, window_rng, clean_op), lat)
    ks = config.ks()

    def job(seed):
        base = RngStream(seed)
        noisy_op = add_noise(clean_op, config.snr_db, base.spawn(_S_NOISE))
        coeffs = fs.analyze(noisy_op)
        noisy, ranked = greedy_error_curve(noisy_op, fs, coeffs=coeffs)
        clean, _ = greedy_error_curve(noisy_op, fs, reference=clean_op, coeffs=coeffs)
        sig = sigma_tail(ranked)
        curves = {"noisy": noisy, "clean": clean}
        for name, errs in curves.items():
            write_csv(out / f"denoise_{name}_seed{seed}.csv", ["K", "app_err", "wne", "sigma_tail"],
                      ((k, errs[k], None, sig[k]) for k in ks))
        k_star = int(np.argmin(clean))
        return {
            "noisy": noisy,
            "clean": clean,
            "k_star": k_star,
            "clean_min": float(clean[k_star]),
            "clean_full": float(clean[size]),
            "zeroed_at_k_star": 1.0 - k_star / size,
        }

    runs = dict(zip(config.seeds, _run_jobs(config, job, list(config.seeds))))
    summary = _summary_header(config)
    summary["coefficients"] = size
    summary["runs"] = {str(s): {k: v for k, v in r.items() if k not in ("noisy", "clean")} for s, r in runs.items()}
    write_json(out / "denoise_summary.json", summary)
    return {"coefficients": size, "runs": runs}


def scenario_operators(n: int, base: RngStream) -> dict:
    return {
        "spreading": spreading_to_operator(gaussian_spreading(n)),
        "mixed": mixed_state(gaussian_window(n), 250, base.spawn(_S_MIXED)),
        "random": random_operator(n, base.spawn(_S_RANDOM)),
    }


def cmd_scenarios(config: ExperimentConfig, scenarios=None) -> dict:
    """All ten operator/window pairings; full error curves plus the probe errors on the K grid."""
    out = _out_dir(config)
    lat = config.lattice
    size = len(lat)
    if config.k_grid is not None:
        ks = config.ks()
    else:
        ks = sorted(k for k in {0, 1, 2, 5, 10, 20, 50, 100, size // 10, 200, 500, 1000, size} if k <= size)
    ids = [ScenarioId(int(s)) for s in (scenarios or list(ScenarioId))]
    jobs = [(seed, sid) for seed in config.seeds for sid in ids]
    operators = {seed: scenario_operators(config.n, RngStream(seed)) for seed in config.seeds}

    def job(item):
        seed, sid = item
        base = RngStream(seed)
        F = operators[seed][sid.operator_kind]
        kind, rank = sid.window_spec
        window = build_window(kind, config.n, rank, base.spawn(100 + int(sid)), source=F)
        fs = FrameSystem.build(window, lat)
        coeffs = fs.analyze(F)
        errs, ranked = greedy_error_curve(F, fs, coeffs=coeffs)
        sig = sigma_tail(ranked)
        wne = None
        if config.trials:
            wne = white_noise_curve(F, fs, ks, config.trials, base.spawn(200 + int(sid)), coeffs=coeffs)
        write_csv(out / f"scenario{int(sid):02d}_seed{seed}.csv", ["K", "app_err", "wne", "sigma_tail"],
                  ((k, errs[k], None if wne is None else wne[i], sig[k]) for i, k in enumerate(ks)))
        return {"errors": errs, "wne": wne, "ks": ks, "norm": float(np.linalg.norm(F)),
                "sigma": sig, "dual_norm": fs.dual_synthesis_norm(), "window_rank": window.rank}

    results = dict(zip(jobs, _run_jobs(config, job, jobs)))
    summary = _summary_header(config)
    summary["coefficients"] = size
    summary["runs"] = {
        f"seed{seed}_test{int(sid)}": {
            "app_err": {k: float(r["errors"][k]) for k in ks},
            "wne": None if r["wne"] is None else dict(zip(ks, map(float, r["wne"]))),
            "window_rank": r["window_rank"],
        }
        for (seed, sid), r in results.items()
    }
    write_json(out / "scenarios_summary.json", summary)
    return {"coefficients": size, "ks": ks, "results": results}


def decay_operator(alpha, n: int, seed: int) -> np.ndarray:
    """Weighted Fourier-Wigner operator; the same seed gives the same underlying field for every alpha."""
    rng = RngStream(seed).spawn(_S_FIELD)
    if alpha == "gaussian":
        return weighted_fw_operator(None, n, rng, gaussian=True)
    return weighted_fw_operator(float(alpha), n, rng)


def cmd_decay_study(config: ExperimentConfig) -> dict:
    """Best-K curves for each polynomial weight order and the Gaussian reference, rank-1 and rank-6 windows."""
    out = _out_dir(config)
    lat = config.lattice
    size = len(lat)
    ks = config.ks()
    labels = [a for a in config.alpha] + ["gaussian"]
    systems = {}
    for seed in config.seeds:
        base = RngStream(seed)
        systems[seed] = {
            1: FrameSystem.build(gaussian_rank1_window(config.n), lat),
            6: FrameSystem.build(multi_gaussian_window(config.n, 6, base.spawn(_S_WINDOW)), lat),
        }
    jobs = [(seed, label) for seed in config.seeds for label in labels]

    def job(item):
        seed, label = item
        F = decay_operator(label, config.n, seed)
        curves = {}
        for rank, fs in systems[seed].items():
            errs, ranked = greedy_error_curve(F, fs)
            sig = sigma_tail(ranked)
            tag = "gauss" if label == "gaussian" else f"alpha{label:g}"
            write_csv(out / f"decay_{tag}_r{rank}_seed{seed}.csv", ["K", "app_err", "wne", "sigma_tail"],
                      ((k, errs[k], None, sig[k]) for k in ks))
            try:
                rate, r2 = fit_error_decay(np.arange(errs.size), errs)
            except DegenerateFit:
                rate, r2 = None, None
            curves[rank] = {"errors": errs, "rate": rate, "r2": r2, "sigma": sig,
                            "dual_norm": fs.dual_synthesis_norm(), "norm": float(np.linalg.norm(F))}
        return curves

    results = dict(zip(jobs, _run_jobs(config, job, jobs)))
    summary = _summary_header(config)
    summary["coefficients"] = size
    # numerical rank of each canonical dual window (equals the window rank in exact arithmetic)
    summary["dual_numerical_rank"] = {
        f"seed{seed}_r{rank}": fs.dual_window.numerical_rank() for seed, per in systems.items() for rank, fs in per.items()
    }
    summary["runs"] = {
        f"seed{seed}_{label}": {
            f"r{rank}": {"app_err": {k: float(c["errors"][k]) for k in ks}, "rate": c["rate"], "r2": c["r2"]}
            for rank, c in curves.items()
        }
        for (seed, label), curves in results.items()
    }
    write_json(out / "decay_summary.json", summary)
    return {"coefficients": size, "labels": labels, "results": results}


def cmd_localization_report(config: ExperimentConfig) -> dict:
    """Off-diagonal decay of the window's g-Gram matrix and its power-law fit."""
    out = _out_dir(config)
    lat = config.lattice
    base = RngStream(config.seeds[0])
    window = build_window(config.window, config.n, config.rank, base.spawn(_S_WINDOW))
    gram = gram_localization(window, lat)
    try:
        s_hat, c_hat, r2 = fit_decay_exponent(gram, lat)
    except DegenerateFit:
        s_hat = c_hat = r2 = None
    result = {"s_hat": s_hat, "c_hat": c_hat, "r2": r2, "diagonal": [float(gram.diagonal().min()),
                                                                       float(gram.diagonal().max())]}
    exact = None
    if config.window == "gaussian_rank1":
        g = window.phis[0]
        v = np.abs(stft(g, g))
        dx = (lat.xs[None, :] - lat.xs[:, None]) % config.n
        dw = (lat.ws[None, :] - lat.ws[:, None]) % config.n
        exact = v[dx, dw]
        result["max_abs_deviation"] = float(np.max(np.abs(gram - exact)))
    dist = wrapped_distance((lat.xs, lat.ws), (0, 0), config.n)
    header = ["x", "omega", "distance", "entry"] + (["exact"] if exact is not None else [])
    rows = ((int(x), int(w), d, e) + ((ex,) if exact is not None else ())
            for x, w, d, e, ex in zip(lat.xs, lat.ws, dist, gram[0], exact[0] if exact is not None else gram[0]))
    write_csv(out / "localization_row0.csv", header, rows)
    summary = _summary_header(config)
    summary.update(result)
    write_json(out / "localization_summary.json", summary)
    result["gram"] = gram
    return result


def selftest(config: ExperimentConfig | None = None) -> list[tuple[str, bool, str]]:
    """Small internal-consistency checks; returns (name, ok, detail) triples."""
    from .finite_tf import tf_shift_matrix, tf_shift_phase
    from .generators import operator_to_spreading
    from .hs_ops import hs_parseval_check
    from .io import decode_operator, encode_operator
    from . import _fallback, kernels

    config = config or ExperimentConfig.for_command("selftest")
    n, lat = config.n, config.lattice
    rng = RngStream(config.seeds[0])
    checks = []

    def record(name, value, tol):
        checks.append((name, bool(value <= tol), f"{value:.3e} <= {tol:g}"))

    F = random_operator(n, rng.spawn(1))
    window = multi_gaussian_window(n, 2, rng.spawn(2))
    fs = FrameSystem.build(window, lat)
    record("reconstruction", np.linalg.norm(fs.synthesize(fs.analyze(F)) - F), 1e-10)
    lhs, rhs = hs_parseval_check(F, window, lat, fs.frame_op)
    record("hs_parseval", abs(lhs - rhs) / rhs, 1e-10)
    f, g = rng.spawn(3).complex_normal(n), gaussian_window(n)
    moyal = np.sum(np.abs(stft(f, g)) ** 2)
    record("moyal", abs(moyal - n * np.linalg.norm(f) ** 2) / moyal, 1e-10)
    lam, mu = (1, 2), (3, 5)
    comp = tf_shift_matrix(lam, n) @ tf_shift_matrix(mu, n)
    record("composition", np.abs(comp - tf_shift_phase(lam, mu, n) * tf_shift_matrix((4, 7), n)).max(), 1e-12)
    eta = rng.spawn(4).complex_normal((n, n))
    record("fourier_wigner", np.abs(operator_to_spreading(spreading_to_operator(eta)) - eta).max(), 1e-12)
    back, _ = decode_operator(encode_operator(F))
    checks.append(("hso1_roundtrip", bool(np.array_equal(back, F)), "bitwise"))
    state = np.array([1, 2, 3, 4], dtype=np.uint64)
    a, b = np.empty(8, np.uint64), np.empty(8, np.uint64)
    s1, s2 = state.copy(), state.copy()
    kernels.xoshiro_fill(s1, a)
    _fallback.xoshiro_fill(s2, b)
    checks.append(("rng_backends", bool(np.array_equal(a, b)), kernels.BACKEND))
    return checks
