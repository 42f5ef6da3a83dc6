"""Experiment harnesses: empirical convergence rates and clustering benchmarks.

Everything here is reproducible from (config, seed): replicate r draws from
a counter-based Philox stream keyed ``seed XOR r``, and results are gathered
in input order regardless of the execution pool, so two runs with the same
config produce identical outputs.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import clustering as cl
from .fields import ctf_grid
from .geometry import circle_tensor
from .kernels import builtin_truncation, kernel_by_name
from .measures import _philox, empirical_measure, gen_arrangement_suite
from .plots import emit_plot


def square_grid(lo: float, hi: float, n: int) -> np.ndarray:
    """n x n grid of points on [lo, hi]^2, row-major."""
    axis = np.linspace(lo, hi, n)
    xx, yy = np.meshgrid(axis, axis, indexing="ij")
    return np.column_stack([xx.ravel(), yy.ravel()])


# ---------------------------------------------------------------------------
# convergence of empirical covariance fields on the circle
# ---------------------------------------------------------------------------

@dataclass
class ConvergeConfig:
    radius: float = 1.0
    sigma: float = 0.6
    grid_n: int = 24
    grid_lo: float = -1.5
    grid_hi: float = 1.5
    n_values: tuple = (10, 100, 1000, 10000, 100000)
    replicates: int = 30
    seed: int = 0
    threads: int = 1
    out_dir: str | None = None


@dataclass
class ConvergenceReport:
    """Mean sup-grid errors by sample size with rate fits.

    epsilon_n is the mean over replicates of the grid maximum of the
    Frobenius deviation between the empirical field and the closed form of
    the uniform circle law.  Fits are least squares in log-log scale for the
    models C ln(n)^{3/4} n^{-1/2} and C n^{-1/2} (constants only) and
    C n^p (free exponent).
    """

    n_values: list
    mean_errors: list
    rep_errors: list  # per n, list over replicates
    fit_lograte_constant: float
    fit_lograte_residual: float
    fit_sqrt_constant: float
    fit_sqrt_residual: float
    fit_power_constant: float
    fit_power_exponent: float
    fit_power_residual: float
    monotone_decreasing: bool

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    def save_csv(self, path) -> None:
        lines = ["n,mean_error"] + [
            f"{n},{repr(float(e))}" for n, e in zip(self.n_values, self.mean_errors)
        ]
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")


def _exact_circle_field(cfg: ConvergeConfig, grid: np.ndarray) -> np.ndarray:
    # closed form for unit-mass (normalized arc length) circle law
    total = 2.0 * math.pi * cfg.radius
    out = np.zeros((grid.shape[0], 2, 2))
    for i, x in enumerate(grid):
        out[i] = circle_tensor(cfg.radius, x, cfg.sigma).entries / total
    return out


def run_converge(cfg: ConvergeConfig) -> ConvergenceReport:
    """Sample i.i.d. points from the uniform circle law and tabulate errors."""
    if not cfg.n_values:
        raise ValueError("empty n ladder")
    n_values = sorted(int(n) for n in cfg.n_values)
    grid = square_grid(cfg.grid_lo, cfg.grid_hi, cfg.grid_n)
    exact = _exact_circle_field(cfg, grid)
    kernel = builtin_truncation()

    def one_replicate(rep: int) -> list[float]:
        rng = _philox(cfg.seed, stream=rep)
        errs = []
        for n in n_values:
            theta = rng.uniform(0.0, 2.0 * math.pi, size=n)
            pts = cfg.radius * np.column_stack([np.cos(theta), np.sin(theta)])
            emp = empirical_measure(pts)
            tensors = ctf_grid(emp, kernel, grid, cfg.sigma, acceleration="indexed").tensors
            errs.append(float(np.linalg.norm(tensors - exact, axis=(1, 2)).max()))
        return errs

    reps = range(cfg.replicates)
    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            all_errs = list(pool.map(one_replicate, reps))
    else:
        all_errs = [one_replicate(r) for r in reps]
    per_n = np.asarray(all_errs)  # (reps, len(n_values))
    eps = per_n.mean(axis=0)

    ln = np.log(np.asarray(n_values, dtype=float))
    le = np.log(eps)
    log_r2 = 0.75 * np.log(np.log(np.asarray(n_values, dtype=float))) - 0.5 * ln
    c_r2 = float(np.exp(np.mean(le - log_r2)))
    res_r2 = float(np.sqrt(np.mean((le - (math.log(c_r2) + log_r2)) ** 2)))
    c_sq = float(np.exp(np.mean(le + 0.5 * ln)))
    res_sq = float(np.sqrt(np.mean((le - (math.log(c_sq) - 0.5 * ln)) ** 2)))
    if len(n_values) >= 2:
        p, logc = np.polyfit(ln, le, 1)
        res_pow = float(np.sqrt(np.mean((le - (logc + p * ln)) ** 2)))
    else:
        p, logc, res_pow = math.nan, math.nan, math.nan

    report = ConvergenceReport(
        n_values=n_values,
        mean_errors=[float(e) for e in eps],
        rep_errors=per_n.T.tolist(),
        fit_lograte_constant=c_r2,
        fit_lograte_residual=res_r2,
        fit_sqrt_constant=c_sq,
        fit_sqrt_residual=res_sq,
        fit_power_constant=float(np.exp(logc)),
        fit_power_exponent=float(p),
        fit_power_residual=res_pow,
        monotone_decreasing=bool(np.all(np.diff(eps) < 0)),
    )
    if cfg.out_dir:
        os.makedirs(cfg.out_dir, exist_ok=True)
        report.save_csv(os.path.join(cfg.out_dir, "converge.csv"))
        with open(os.path.join(cfg.out_dir, "converge.json"), "w") as fh:
            fh.write(report.to_json() + "\n")
        nv = np.asarray(n_values, dtype=float)
        emit_plot(
            "loglog",
            {
                "x": nv,
                "series": [
                    ("observed", eps),
                    ("C*ln(n)^0.75/sqrt(n)", c_r2 * np.log(nv) ** 0.75 / np.sqrt(nv)),
                    ("C/sqrt(n)", c_sq / np.sqrt(nv)),
                ],
            },
            os.path.join(cfg.out_dir, "converge.svg"),
        )
    return report


# ---------------------------------------------------------------------------
# clustering benchmark with learned parameters
# ---------------------------------------------------------------------------

_TRUE_K = {"lines2d": 3, "mixed_curves2d": 4, "planes3d": 3}


_SUITE_DEFAULTS = {
    # points per component, sigma grid, gamma grid (calibrated on held-out seeds)
    "lines2d": (100, (0.025, 0.04, 0.06), (0.0, 0.002, 0.006)),
    "mixed_curves2d": (100, (0.025, 0.04, 0.06), (0.0, 0.002, 0.006)),
    "planes3d": (225, (0.1, 0.15, 0.2), (0.0, 0.002, 0.008)),
}


@dataclass
class BenchmarkConfig:
    kind: str = "lines2d"
    n_samples: int = 250
    n_train: int = 50
    points_per_component: int | None = None  # kind default when None
    noise_sd: float = 0.002
    seed: int = 0
    kernel: str = "gaussian"
    sigma_grid: tuple | None = None  # kind default when None
    gamma_grid: tuple | None = None
    cutoff_steps: int = 50
    cutoff_width_stds: float = 2.0
    threads: int = 1
    out_dir: str | None = None

    def resolved(self) -> "BenchmarkConfig":
        ppc, sgrid, ggrid = _SUITE_DEFAULTS[self.kind]
        out = BenchmarkConfig(**asdict(self))
        if out.points_per_component is None:
            out.points_per_component = ppc
        if out.sigma_grid is None:
            out.sigma_grid = sgrid
        if out.gamma_grid is None:
            out.gamma_grid = ggrid
        return out


@dataclass
class BenchmarkResult:
    kind: str
    ae: float  # mean error rate over test samples
    me: float  # median error rate over test samples
    best_sigma: float
    best_gamma: float
    best_cut_offset: float  # offset from the mean cophenetic height, in stds
    train_error: float
    test_errors: list

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)


def _cluster_errors_for_params(dataset, kernel, sigma, gamma, offsets, k_true):
    """Error rate at each cutoff offset (in cophenetic stds) for one sample."""
    params = cl.TensorizedMetricParams(gamma=gamma, sigma=sigma, kernel=kernel)
    d = cl.tensorized_distances(dataset.measure, params)
    dend = cl.single_linkage(d)
    h0 = cl.mean_cophenetic(dend)
    sd = cl.cophenetic_std(dend)
    errs = []
    for u in offsets:
        h = max(h0 + u * sd, 0.0)
        assignment = cl.cut(dend, height=h)
        if assignment.k >= k_true:
            assignment = cl.topk_reassign(assignment, d, k_true)
        errs.append(cl.score(assignment.labels, dataset.labels))
    return errs


def run_cluster_benchmark(cfg: BenchmarkConfig) -> BenchmarkResult:
    """Grid-search (sigma, gamma, cutoff) on a training split, score on test.

    The cutoff is parameterized as an offset from each sample's own mean
    cophenetic distance h0, measured in standard deviations of its
    cophenetic distribution, so one learned offset transfers across samples.
    AE is the mean error rate over test samples and ME the median.
    """
    if cfg.kind not in _SUITE_DEFAULTS:
        raise ValueError(f"unknown suite kind {cfg.kind!r}")
    cfg = cfg.resolved()
    if cfg.n_samples < 2 or not (1 <= cfg.n_train < cfg.n_samples):
        raise ValueError("need n_samples >= 2 and 1 <= n_train < n_samples")
    suite = gen_arrangement_suite(
        cfg.kind,
        cfg.n_samples,
        seed=cfg.seed,
        points_per_component=cfg.points_per_component,
        noise_sd=cfg.noise_sd,
    )
    if not suite:
        raise ValueError("empty suite")
    k_true = _TRUE_K[cfg.kind]
    kernel = kernel_by_name(cfg.kernel)
    train, test = suite[: cfg.n_train], suite[cfg.n_train :]
    offsets = np.linspace(-cfg.cutoff_width_stds, cfg.cutoff_width_stds, cfg.cutoff_steps)

    combos = [(s, g) for s in cfg.sigma_grid for g in cfg.gamma_grid]

    def train_one(combo):
        s, g = combo
        table = np.array(
            [_cluster_errors_for_params(ds, kernel, s, g, offsets, k_true) for ds in train]
        )
        return table.mean(axis=0)

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            tables = list(pool.map(train_one, combos))
    else:
        tables = [train_one(c) for c in combos]
    best_err = math.inf
    best = (cfg.sigma_grid[0], cfg.gamma_grid[0], 0.0)
    for (s, g), mean_by_offset in zip(combos, tables):
        j = int(np.argmin(mean_by_offset))
        if mean_by_offset[j] < best_err:
            best_err = float(mean_by_offset[j])
            best = (s, g, float(offsets[j]))
    s, g, u = best

    def test_one(ds):
        return _cluster_errors_for_params(ds, kernel, s, g, [u], k_true)[0]

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            test_errs = list(pool.map(test_one, test))
    else:
        test_errs = [test_one(ds) for ds in test]
    result = BenchmarkResult(
        kind=cfg.kind,
        ae=float(np.mean(test_errs)),
        me=float(np.median(test_errs)),
        best_sigma=float(s),
        best_gamma=float(g),
        best_cut_offset=float(u),
        train_error=best_err,
        test_errors=[float(e) for e in test_errs],
    )
    if cfg.out_dir:
        os.makedirs(cfg.out_dir, exist_ok=True)
        with open(os.path.join(cfg.out_dir, f"bench_{cfg.kind}.json"), "w") as fh:
            fh.write(result.to_json() + "\n")
        lines = ["sample,error"] + [
            f"{i},{repr(float(e))}" for i, e in enumerate(result.test_errors)
        ]
        with open(os.path.join(cfg.out_dir, f"bench_{cfg.kind}.csv"), "w") as fh:
            fh.write("\n".join(lines) + "\n")
    return result
