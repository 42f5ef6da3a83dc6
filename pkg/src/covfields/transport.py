"""Exact optimal transport between finite measures and stability certificates.

W1 is solved as the transportation linear program (HiGHS dual simplex, an
exact vertex method); W-infinity as a bottleneck problem by binary search
over the sorted pairwise distances with a max-flow feasibility check.  Only
exact solvers are used — certifying an inequality against an approximate
transport cost would invalidate its direction.  Couplings induce
correspondences between supports, whose metric distortion upper-bounds
twice the Gromov-Hausdorff distance.

The certificates implemented here:

  smooth kernels:     sup_x ||Sigma_a(x) - Sigma_b(x)|| <= sigma A_f / C_d(sigma) * W1(a, b)
  truncation kernel:  sup_x ||Sigma_a(x) - Sigma_b(x)|| <= lambda A(sigma, d, c) * Winf(a, b)

with A_f = 2 (A1 + A2) from the kernel constants, lambda a density-bound
certificate for the first measure, c a diameter bound of the common
support, and

  A(sigma, d, c) = [d/(d+2)] (sigma+c)^{d+2} / (c sigma^d)
                 + (2 sigma + c)(sigma + c)^d / sigma^d
                 + [2d/(d+2)] (sigma+c)^{d+2} / (c sigma^d).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import sparse
from scipy.optimize import linprog
from scipy.sparse.csgraph import maximum_flow
from scipy.spatial.distance import cdist

from .fields import ctf_grid
from .kernels import RadialKernel, derive_constants, unit_sphere_area
from .measures import WeightedMeasure

DEFAULT_MAX_ATOMS = 2000
MARGINAL_TOL = 1e-9


@dataclass(frozen=True)
class TransportPlan:
    """Coupling matrix between two weighted measures with its cost."""

    coupling: np.ndarray  # (n, m), row sums = source weights, col sums = target weights
    cost_w1: float
    source: WeightedMeasure
    target: WeightedMeasure

    def max_edge(self) -> float:
        """Largest distance carried by the support of the coupling."""
        i, j = np.nonzero(self.coupling > 0)
        if i.size == 0:
            return 0.0
        d = np.linalg.norm(self.source.atoms[i] - self.target.atoms[j], axis=1)
        return float(d.max())

    def marginal_errors(self) -> tuple[float, float]:
        row = np.abs(self.coupling.sum(axis=1) - self.source.weights).max()
        col = np.abs(self.coupling.sum(axis=0) - self.target.weights).max()
        return float(row), float(col)


@dataclass(frozen=True)
class Correspondence:
    """A relation covering both index sets: every i and every j appear."""

    pairs: np.ndarray  # (k, 2) int

    def __post_init__(self):
        pairs = np.asarray(self.pairs, dtype=np.int64).reshape(-1, 2)
        pairs.setflags(write=False)
        object.__setattr__(self, "pairs", pairs)

    def covers(self, n: int, m: int) -> bool:
        return (
            np.unique(self.pairs[:, 0]).size == n
            and np.unique(self.pairs[:, 1]).size == m
            and self.pairs[:, 0].min() >= 0
            and self.pairs[:, 1].min() >= 0
            and self.pairs[:, 0].max() < n
            and self.pairs[:, 1].max() < m
        )


def _check_probability(measure: WeightedMeasure, label: str) -> None:
    if abs(measure.total_mass - 1.0) > MARGINAL_TOL:
        raise ValueError(f"{label} must be a normalized probability measure")


def _check_size(measure: WeightedMeasure, max_atoms: int, label: str) -> None:
    if measure.size > max_atoms:
        raise ValueError(
            f"{label} has {measure.size} atoms > max {max_atoms}; subsample or raise the cap"
        )


def w1_exact(
    alpha: WeightedMeasure,
    beta: WeightedMeasure,
    max_atoms: int = DEFAULT_MAX_ATOMS,
) -> tuple[float, TransportPlan]:
    """Exact 1-Wasserstein distance and an optimal coupling.

    Solves min <d, pi> over couplings pi with the prescribed marginals as a
    linear program with HiGHS dual simplex; the optimum is attained at a
    vertex, so the returned plan has at most n + m - 1 atoms of support.
    """
    _check_probability(alpha, "alpha")
    _check_probability(beta, "beta")
    _check_size(alpha, max_atoms, "alpha")
    _check_size(beta, max_atoms, "beta")
    if alpha.dim != beta.dim:
        raise ValueError("measures must live in the same dimension")
    n, m = alpha.size, beta.size
    cost = cdist(alpha.atoms, beta.atoms)
    # marginal constraints; the last one is redundant and dropped
    row_idx = np.repeat(np.arange(n), m)
    col_idx = n + np.tile(np.arange(m), n)
    var_idx = np.arange(n * m)
    a_eq = sparse.csr_matrix(
        (
            np.ones(2 * n * m),
            (np.concatenate([row_idx, col_idx]), np.concatenate([var_idx, var_idx])),
        ),
        shape=(n + m, n * m),
    )[:-1]
    b_eq = np.concatenate([alpha.weights, beta.weights])[:-1]
    res = linprog(cost.ravel(), A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs-ds")
    if res.status != 0:
        raise RuntimeError(f"transport LP failed: {res.message}")
    pi = np.maximum(res.x.reshape(n, m), 0.0)
    value = float((pi * cost).sum())
    return value, TransportPlan(pi, value, alpha, beta)


def _integer_capacities(weights: np.ndarray) -> tuple[np.ndarray, int] | None:
    """Represent weights exactly as integers over a common denominator.

    Returns (numerators, denominator) when every weight is within 1e-12 of a
    rational with small denominator and the common denominator stays below
    2^40; None otherwise.
    """
    fracs = [Fraction(float(w)).limit_denominator(10**7) for w in weights]
    if any(abs(float(f) - float(w)) > 1e-12 for f, w in zip(fracs, weights)):
        return None
    denom = 1
    for f in fracs:
        denom = denom * f.denominator // math.gcd(denom, f.denominator)
        if denom > 2**40:
            return None
    return np.array([int(f.numerator * (denom // f.denominator)) for f in fracs], dtype=np.int64), denom


def _scaled_capacities(wa: np.ndarray, wb: np.ndarray) -> tuple[np.ndarray, np.ndarray, int]:
    """Integer capacities for both marginals over one common denominator.

    Prefers an exact rational representation; otherwise rounds at scale 1e9
    (guard: per-weight distortion <= 1e-9 of mass) and repairs the largest
    entry so both sides carry identical total flow.
    """
    ra = _integer_capacities(wa)
    rb = _integer_capacities(wb)
    if ra is not None and rb is not None:
        na, da = ra
        nb, db = rb
        denom = da * db // math.gcd(da, db)
        if denom <= 2**40:
            a = na * (denom // da)
            b = nb * (denom // db)
            if a.sum() == b.sum():
                return a, b, denom
    scale = 10**9
    a = np.round(wa * scale).astype(np.int64)
    b = np.round(wb * scale).astype(np.int64)
    a[np.argmax(a)] += scale - a.sum()
    b[np.argmax(b)] += scale - b.sum()
    if a.min() <= 0 or b.min() <= 0:
        raise ValueError("weights too small to scale to integer capacities")
    return a, b, scale


def _bottleneck_feasible(dist: np.ndarray, a: np.ndarray, b: np.ndarray, threshold: float):
    """Max-flow test: can all mass move along edges of length <= threshold?"""
    n, m = dist.shape
    total = int(a.sum())
    src, snk = 0, n + m + 1
    ii, jj = np.nonzero(dist <= threshold)
    rows = np.concatenate([np.zeros(n, dtype=np.int64), 1 + ii, 1 + n + np.arange(m)])
    cols = np.concatenate([1 + np.arange(n), 1 + n + jj, np.full(m, snk, dtype=np.int64)])
    caps = np.concatenate([a, np.minimum(a[ii], b[jj]), b])
    graph = sparse.csr_matrix((caps, (rows, cols)), shape=(n + m + 2, n + m + 2))
    result = maximum_flow(graph, src, snk)
    return result.flow_value == total, result, (ii, jj)


def winf_exact(
    alpha: WeightedMeasure,
    beta: WeightedMeasure,
    max_atoms: int = DEFAULT_MAX_ATOMS,
) -> tuple[float, TransportPlan]:
    """Exact infinity-Wasserstein (bottleneck) distance and a witness plan.

    Binary-searches the sorted distinct pairwise distances; a threshold t is
    feasible iff the max flow through the bipartite graph restricted to
    edges <= t saturates the total mass.  The witness plan's largest support
    edge equals the returned value.
    """
    _check_probability(alpha, "alpha")
    _check_probability(beta, "beta")
    _check_size(alpha, max_atoms, "alpha")
    _check_size(beta, max_atoms, "beta")
    if alpha.dim != beta.dim:
        raise ValueError("measures must live in the same dimension")
    dist = cdist(alpha.atoms, beta.atoms)
    a, b, denom = _scaled_capacities(alpha.weights, beta.weights)
    levels = np.unique(dist)
    lo, hi = 0, levels.size - 1
    feasible_hi = _bottleneck_feasible(dist, a, b, levels[hi])
    if not feasible_hi[0]:
        raise RuntimeError("bottleneck search failed at the maximal distance")
    best = feasible_hi
    best_level = levels[hi]
    while lo < hi:
        mid = (lo + hi) // 2
        ok = _bottleneck_feasible(dist, a, b, levels[mid])
        if ok[0]:
            hi = mid
            best = ok
            best_level = levels[mid]
        else:
            lo = mid + 1
    n, m = dist.shape
    flow = best[1].flow.tocsr()
    pi = np.zeros((n, m))
    block = flow[1 : 1 + n, 1 + n : 1 + n + m].toarray()
    pi[:, :] = block / denom
    value = float(best_level)
    plan = TransportPlan(pi, float((pi * dist).sum()), alpha, beta)
    return value, plan


def distortion(corr: Correspondence, d_x: np.ndarray, d_y: np.ndarray) -> float:
    """Metric distortion of a correspondence: max |d_X(i,i') - d_Y(j,j')|.

    The max runs over all pairs of related pairs; twice the Gromov-Hausdorff
    distance is the infimum of this quantity over correspondences.
    """
    d_x = np.asarray(d_x, dtype=float)
    d_y = np.asarray(d_y, dtype=float)
    if not corr.covers(d_x.shape[0], d_y.shape[0]):
        raise ValueError("relation does not cover both index sets")
    i = corr.pairs[:, 0]
    j = corr.pairs[:, 1]
    return float(np.abs(d_x[np.ix_(i, i)] - d_y[np.ix_(j, j)]).max())


def correspondence_from_plan(plan: TransportPlan, support_tol: float = 1e-9) -> Correspondence:
    """Correspondence given by the (thresholded) support of a coupling.

    Pairs with pi_ij > support_tol * max(pi) are kept; rows or columns that
    end up uncovered are supplemented with their largest-mass pair so the
    result is always a correspondence.
    """
    pi = plan.coupling
    cut = support_tol * pi.max()
    ii, jj = np.nonzero(pi > cut)
    covered_i = np.zeros(pi.shape[0], dtype=bool)
    covered_j = np.zeros(pi.shape[1], dtype=bool)
    covered_i[ii] = True
    covered_j[jj] = True
    extra_i = np.nonzero(~covered_i)[0]
    extra_j = np.nonzero(~covered_j)[0]
    pairs = [np.column_stack([ii, jj])]
    if extra_i.size:
        pairs.append(np.column_stack([extra_i, pi[extra_i].argmax(axis=1)]))
    if extra_j.size:
        pairs.append(np.column_stack([pi[:, extra_j].argmax(axis=0), extra_j]))
    return Correspondence(np.concatenate(pairs, axis=0))


# ---------------------------------------------------------------------------
# stability certificates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StabilityReport:
    """Observed field deviation against its theoretical bound."""

    lhs: float  # sup over the grid of the Frobenius field difference
    rhs: float  # theoretical bound
    transport_cost: float
    constants: dict = field(default_factory=dict)

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def passed(self) -> bool:
        return self.lhs <= self.rhs + 1e-9 * abs(self.rhs)

    def to_dict(self) -> dict:
        return {
            "lhs": self.lhs,
            "rhs": self.rhs,
            "slack": self.slack,
            "passed": self.passed,
            "transport_cost": self.transport_cost,
            "constants": dict(self.constants),
        }


def _grid_sup_diff(alpha, beta, kernel, sigma, grid) -> float:
    ga = ctf_grid(alpha, kernel, grid, sigma).tensors
    gb = ctf_grid(beta, kernel, grid, sigma).tensors
    if ga.shape[0] == 0:
        return 0.0
    return float(np.linalg.norm(ga - gb, axis=(1, 2)).max())


def check_stability_smooth(
    alpha: WeightedMeasure,
    beta: WeightedMeasure,
    kernel: RadialKernel,
    sigma: float,
    grid,
) -> StabilityReport:
    """Certify sup_x ||Sigma_a - Sigma_b|| <= sigma A_f / C_d(sigma) * W1(a, b).

    Requires a smooth-stability-eligible kernel (derivative with finite A1).
    """
    consts = derive_constants(kernel, alpha.dim)
    if not consts.smooth_stability_eligible:
        raise ValueError("kernel is not smooth-stability eligible (no derivative / infinite A1)")
    w1, _ = w1_exact(alpha, beta)
    lhs = _grid_sup_diff(alpha, beta, kernel, sigma, grid)
    factor = sigma * consts.a_f / consts.c_d(sigma)
    rhs = factor * w1
    return StabilityReport(
        lhs,
        rhs,
        w1,
        {"A_f": consts.a_f, "C_d": consts.c_d(sigma), "sigma": sigma},
    )


def truncation_stability_constant(sigma: float, d: int, c: float) -> float:
    """The three-term constant A(sigma, d, c) of the truncation-kernel bound."""
    if sigma <= 0 or c <= 0:
        raise ValueError("sigma and c must be positive")
    t1 = d / (d + 2.0) * (sigma + c) ** (d + 2) / (c * sigma**d)
    t2 = (2.0 * sigma + c) * (sigma + c) ** d / sigma**d
    t3 = 2.0 * d / (d + 2.0) * (sigma + c) ** (d + 2) / (c * sigma**d)
    return t1 + t2 + t3


def check_stability_trunc(
    alpha: WeightedMeasure,
    beta: WeightedMeasure,
    sigma: float,
    c: float,
    lam: float,
    grid,
    kernel: RadialKernel | None = None,
) -> StabilityReport:
    """Certify the truncation-kernel bound lambda A(sigma, d, c) Winf(a, b).

    ``lam`` is a caller-supplied density-bound certificate: the first
    measure must satisfy alpha(A) <= lam * Lebesgue(A) (e.g. max weight /
    min quadrature cell volume for a quadrature measure).  Purely atomic
    measures have no such bound, so runs on them are heuristic.
    """
    if lam is None or lam <= 0:
        raise ValueError("a positive density bound lam is required")
    from .kernels import builtin_truncation

    kernel = kernel or builtin_truncation()
    winf, _ = winf_exact(alpha, beta)
    lhs = _grid_sup_diff(alpha, beta, kernel, sigma, grid)
    a_const = truncation_stability_constant(sigma, alpha.dim, c)
    rhs = lam * a_const * winf
    return StabilityReport(
        lhs,
        rhs,
        winf,
        {"A": a_const, "lambda": lam, "c": c, "sigma": sigma},
    )


def radial_moment(a: float, b: float, d: int) -> float:
    """Radial moment of inertia of the annulus a < ||y|| <= b in R^d.

    s_d(a, b) = omega_{d-1} / (d+2) * (b^{d+2} - a^{d+2}).
    """
    if not (0 <= a < b):
        raise ValueError("need 0 <= a < b")
    return unit_sphere_area(d) / (d + 2.0) * (b ** (d + 2) - a ** (d + 2))


def radial_moment_bound(a: float, b: float, big_b: float, d: int) -> float:
    """Upper bound (b-a) * omega_{d-1}/(d+2) * B^{d+2}/(B-a) for any B >= b."""
    if not (0 <= a < b <= big_b):
        raise ValueError("need 0 <= a < b <= B")
    return (b - a) * unit_sphere_area(d) / (d + 2.0) * big_b ** (d + 2) / (big_b - a)
