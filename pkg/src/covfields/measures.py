"""Weighted point measures in R^d, synthetic dataset generators, and file I/O.

A :class:`WeightedMeasure` is a finite collection of atoms with strictly
positive weights.  It stands in for three kinds of objects: empirical
measures (uniform weights 1/n), deterministic quadrature approximations of
singular measures (arc length, surface area), and arbitrary weighted point
sets.  Quadrature generators use the midpoint rule, so the discretization
error of integrals of smooth functions is O(spacing^2).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

MASS_TOL = 1e-12


class MeasureFormatError(ValueError):
    """Raised when a measure/dataset file cannot be parsed."""


def _philox(seed: int, stream: int = 0) -> np.random.Generator:
    """Counter-based RNG (Philox4x64-10); streams derived as seed XOR stream."""
    return np.random.Generator(np.random.Philox(key=np.uint64(seed) ^ np.uint64(stream)))


@dataclass(frozen=True)
class WeightedMeasure:
    """Finite positive Borel measure given by atoms and positive weights.

    Atoms are an (n, d) array, weights an (n,) array.  ``normalized`` is
    True iff the total mass is 1 within 1e-12.  Instances are immutable
    (arrays are marked read-only) and safe to share across threads.
    """

    atoms: np.ndarray
    weights: np.ndarray
    normalized: bool = field(init=False)

    def __post_init__(self):
        atoms = np.ascontiguousarray(np.atleast_2d(np.asarray(self.atoms, dtype=float)))
        weights = np.ascontiguousarray(np.asarray(self.weights, dtype=float).ravel())
        if atoms.ndim != 2:
            raise ValueError("atoms must be an (n, d) array")
        if atoms.shape[0] != weights.shape[0]:
            raise ValueError(
                f"atom/weight length mismatch: {atoms.shape[0]} atoms, {weights.shape[0]} weights"
            )
        if atoms.shape[0] == 0:
            raise ValueError("measure must contain at least one atom")
        if not np.all(np.isfinite(atoms)):
            raise ValueError("atoms must be finite (no NaN/Inf coordinates)")
        if not np.all(np.isfinite(weights)) or np.any(weights <= 0.0):
            raise ValueError("weights must be positive")
        atoms.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "normalized", abs(weights.sum() - 1.0) <= MASS_TOL)

    @property
    def dim(self) -> int:
        return self.atoms.shape[1]

    @property
    def size(self) -> int:
        return self.atoms.shape[0]

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    def normalize(self) -> "WeightedMeasure":
        """Return the same atoms with weights rescaled to total mass 1."""
        return WeightedMeasure(self.atoms, self.weights / self.weights.sum())

    def scale_weights(self, factor: float) -> "WeightedMeasure":
        return WeightedMeasure(self.atoms, self.weights * factor)

    def transform(self, matrix: np.ndarray | None = None, shift: np.ndarray | None = None) -> "WeightedMeasure":
        """Pushforward under the affine map x -> matrix @ x + shift."""
        pts = self.atoms
        if matrix is not None:
            pts = pts @ np.asarray(matrix, dtype=float).T
        if shift is not None:
            pts = pts + np.asarray(shift, dtype=float)
        return WeightedMeasure(pts, self.weights)


def empirical_measure(points: np.ndarray) -> WeightedMeasure:
    """Uniform-weight (1/n) measure on the given points."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n = points.shape[0]
    return WeightedMeasure(points, np.full(n, 1.0 / n))


@dataclass(frozen=True)
class LabeledDataset:
    """A measure together with integer cluster labels, one per atom.

    Component labels are 0..k-1; outliers, when present, carry the reserved
    label k (one past the largest component label).
    """

    measure: WeightedMeasure
    labels: np.ndarray
    description: str = ""

    def __post_init__(self):
        labels = np.ascontiguousarray(np.asarray(self.labels, dtype=np.int64).ravel())
        if labels.shape[0] != self.measure.size:
            raise ValueError("labels length must equal atom count")
        if np.any(labels < 0):
            raise ValueError("labels must be non-negative integers")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    @property
    def n_labels(self) -> int:
        return int(self.labels.max()) + 1


# ---------------------------------------------------------------------------
# quadrature generators for singular measures
# ---------------------------------------------------------------------------

def quadrature_segment(endpoint_a, endpoint_b, spacing: float) -> WeightedMeasure:
    """Midpoint-rule discretization of the arc-length measure on a segment.

    Atoms sit at midpoints of consecutive sub-intervals of length
    ``spacing``; each weight equals the sub-interval length (the last one is
    shortened so the total mass equals the segment length exactly).
    """
    a = np.asarray(endpoint_a, dtype=float).ravel()
    b = np.asarray(endpoint_b, dtype=float).ravel()
    if a.shape != b.shape:
        raise ValueError("endpoints must have the same dimension")
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    length = float(np.linalg.norm(b - a))
    if length == 0.0:
        raise ValueError("degenerate segment: endpoints coincide")
    n = max(1, int(math.ceil(length / spacing - 1e-12)))
    edges = np.minimum(np.arange(n + 1) * spacing, length)
    mids = 0.5 * (edges[:-1] + edges[1:])
    widths = np.diff(edges)
    direction = (b - a) / length
    atoms = a[None, :] + mids[:, None] * direction[None, :]
    return WeightedMeasure(atoms, widths)


def quadrature_circle(radius: float, n_atoms: int) -> WeightedMeasure:
    """Arc-length measure on the circle of given radius centered at 0 in R^2.

    Atoms at angles 2*pi*k/n, each carrying weight 2*pi*R/n (total mass =
    circumference).
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    if n_atoms < 3:
        raise ValueError("n_atoms must be at least 3")
    theta = 2.0 * np.pi * np.arange(n_atoms) / n_atoms
    atoms = radius * np.column_stack([np.cos(theta), np.sin(theta)])
    w = np.full(n_atoms, 2.0 * np.pi * radius / n_atoms)
    return WeightedMeasure(atoms, w)


def quadrature_arc(radius: float, theta_min: float, theta_max: float, n_atoms: int) -> WeightedMeasure:
    """Arc-length measure on a circular arc, midpoint rule in the angle.

    Useful for localized evaluations where a compactly supported kernel only
    ever sees part of the circle.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    if theta_max <= theta_min:
        raise ValueError("empty arc")
    if n_atoms < 1:
        raise ValueError("n_atoms must be positive")
    h = (theta_max - theta_min) / n_atoms
    theta = theta_min + (np.arange(n_atoms) + 0.5) * h
    atoms = radius * np.column_stack([np.cos(theta), np.sin(theta)])
    w = np.full(n_atoms, radius * h)
    return WeightedMeasure(atoms, w)


def quadrature_sphere(radius: float, n_theta: int, n_phi: int) -> WeightedMeasure:
    """Surface-area measure on the sphere of given radius centered at 0 in R^3.

    Latitude-longitude midpoint quadrature with area-element weights
    R^2 sin(theta) dtheta dphi; total mass converges to 4*pi*R^2 at O(1/n^2).
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    if n_theta < 2 or n_phi < 3:
        raise ValueError("need n_theta >= 2 and n_phi >= 3")
    dt = np.pi / n_theta
    dp = 2.0 * np.pi / n_phi
    theta = (np.arange(n_theta) + 0.5) * dt
    phi = (np.arange(n_phi) + 0.5) * dp
    tt, pp = np.meshgrid(theta, phi, indexing="ij")
    st = np.sin(tt)
    atoms = radius * np.column_stack(
        [(st * np.cos(pp)).ravel(), (st * np.sin(pp)).ravel(), np.cos(tt).ravel()]
    )
    w = (radius * radius * st * dt * dp).ravel()
    return WeightedMeasure(atoms, w)


def _edges_with_alignment(lo: float, hi: float, n: int, align) -> np.ndarray:
    edges = np.linspace(lo, hi, n + 1)
    if align is not None:
        extra = np.asarray(align, dtype=float)
        extra = extra[(extra > lo) & (extra < hi)]
        edges = np.unique(np.concatenate([edges, extra]))
    return edges


def quadrature_cap(
    radius: float, theta_max: float, n_theta: int, n_phi: int, align_thetas=None
) -> WeightedMeasure:
    """Surface-area measure on the polar cap theta <= theta_max of a sphere.

    Cell masses are exact (R^2 (cos a - cos b) dphi per cell).  Optional
    ``align_thetas`` inserts extra cell edges at the given polar angles, so
    a ball about the pole whose boundary sits at one of them never straddles
    a cell; this removes the dominant quadrature error when evaluating
    covariance tensors at the pole.
    """
    if radius <= 0 or theta_max <= 0:
        raise ValueError("radius and theta_max must be positive")
    if n_theta < 2 or n_phi < 3:
        raise ValueError("need n_theta >= 2 and n_phi >= 3")
    edges = _edges_with_alignment(0.0, theta_max, n_theta, align_thetas)
    mids = 0.5 * (edges[:-1] + edges[1:])
    band_mass = radius * radius * (np.cos(edges[:-1]) - np.cos(edges[1:]))
    dp = 2.0 * np.pi / n_phi
    phi = (np.arange(n_phi) + 0.5) * dp
    tt, pp = np.meshgrid(mids, phi, indexing="ij")
    st = np.sin(tt)
    atoms = radius * np.column_stack(
        [(st * np.cos(pp)).ravel(), (st * np.sin(pp)).ravel(), np.cos(tt).ravel()]
    )
    w = np.repeat(band_mass * dp, n_phi)
    return WeightedMeasure(atoms, w)


def quadrature_disk(
    radius: float, n_r: int, n_phi: int, center=None, align_radii=None, dim: int = 2
) -> WeightedMeasure:
    """Area measure on a disk via polar cells with exact masses.

    ``align_radii`` inserts extra radial cell edges (same purpose as in
    :func:`quadrature_cap`).  With ``dim=3`` the disk is embedded in the
    z = 0 plane.
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    if n_r < 1 or n_phi < 3:
        raise ValueError("need n_r >= 1 and n_phi >= 3")
    edges = _edges_with_alignment(0.0, radius, n_r, align_radii)
    mids = 0.5 * (edges[:-1] + edges[1:])
    ring_mass = 0.5 * (edges[1:] ** 2 - edges[:-1] ** 2)  # per unit angle
    dp = 2.0 * np.pi / n_phi
    phi = (np.arange(n_phi) + 0.5) * dp
    rr, pp = np.meshgrid(mids, phi, indexing="ij")
    pts = np.column_stack([(rr * np.cos(pp)).ravel(), (rr * np.sin(pp)).ravel()])
    if dim == 3:
        pts = np.column_stack([pts, np.zeros(pts.shape[0])])
    elif dim != 2:
        raise ValueError("dim must be 2 or 3")
    if center is not None:
        pts = pts + np.asarray(center, dtype=float)[None, :]
    w = np.repeat(ring_mass * dp, n_phi)
    return WeightedMeasure(pts, w)


def quadrature_rectangle(lo, hi, spacing: float) -> WeightedMeasure:
    """Midpoint-rule discretization of Lebesgue measure on an axis box."""
    lo = np.asarray(lo, dtype=float).ravel()
    hi = np.asarray(hi, dtype=float).ravel()
    if lo.shape != hi.shape or np.any(hi <= lo):
        raise ValueError("invalid box")
    if spacing <= 0:
        raise ValueError("spacing must be positive")
    axes = []
    cell = 1.0
    for l, h in zip(lo, hi):
        n = max(1, int(round((h - l) / spacing)))
        axes.append(l + (np.arange(n) + 0.5) * (h - l) / n)
        cell *= (h - l) / n
    grids = np.meshgrid(*axes, indexing="ij")
    atoms = np.column_stack([g.ravel() for g in grids])
    return WeightedMeasure(atoms, np.full(atoms.shape[0], cell))


# ---------------------------------------------------------------------------
# labeled synthetic datasets
# ---------------------------------------------------------------------------

def gen_line_arrangement(
    segments,
    noise_sd: float = 0.0,
    n_outliers: int = 0,
    bounding_box=None,
    seed: int = 0,
) -> LabeledDataset:
    """Sample an arrangement of line segments with optional noise and outliers.

    ``segments`` is a list of ((a, b), n_points) pairs; each segment
    contributes n_points equally spaced atoms (endpoints included) labeled by
    its index.  Isotropic Gaussian noise of standard deviation ``noise_sd``
    is added per point; ``n_outliers`` extra atoms are drawn uniformly from
    ``bounding_box = (lo, hi)`` and labeled with the reserved outlier label
    (= number of segments).  Weights are uniform, total mass 1.
    """
    if not segments:
        raise ValueError("empty segment specification")
    rng = _philox(seed)
    pts, labels = [], []
    for idx, ((a, b), n_pts) in enumerate(segments):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if n_pts < 2:
            raise ValueError("each line needs at least 2 points")
        t = np.linspace(0.0, 1.0, n_pts)
        pts.append(a[None, :] + t[:, None] * (b - a)[None, :])
        labels.append(np.full(n_pts, idx, dtype=np.int64))
    points = np.concatenate(pts, axis=0)
    labels = np.concatenate(labels)
    if noise_sd > 0:
        points = points + rng.normal(0.0, noise_sd, size=points.shape)
    if n_outliers > 0:
        if bounding_box is None:
            lo = points.min(axis=0)
            hi = points.max(axis=0)
        else:
            lo = np.asarray(bounding_box[0], dtype=float)
            hi = np.asarray(bounding_box[1], dtype=float)
        out = rng.uniform(lo, hi, size=(n_outliers, points.shape[1]))
        points = np.concatenate([points, out], axis=0)
        labels = np.concatenate([labels, np.full(n_outliers, len(segments), dtype=np.int64)])
    desc = f"line arrangement: {len(segments)} segments, noise_sd={noise_sd}, outliers={n_outliers}"
    return LabeledDataset(empirical_measure(points), labels, desc)


def _cross2(u, v) -> float:
    return float(u[0] * v[1] - u[1] * v[0])


def _random_segment(rng, box_lo, box_hi, min_len):
    for _ in range(200):
        a = rng.uniform(box_lo, box_hi)
        b = rng.uniform(box_lo, box_hi)
        if np.linalg.norm(b - a) >= min_len:
            return a, b
    raise RuntimeError("could not draw a segment of the requested length")


def _gen_lines2d(rng, n_components, points_per, noise_sd):
    # distinct slopes: draw until pairwise direction angles exceed 30 degrees
    box_lo, box_hi = np.zeros(2), np.ones(2)
    while True:
        segs = [_random_segment(rng, box_lo, box_hi, 0.7) for _ in range(n_components)]
        dirs = [(b - a) / np.linalg.norm(b - a) for a, b in segs]
        ok = True
        for i in range(len(dirs)):
            for j in range(i + 1, len(dirs)):
                if abs(_cross2(dirs[i], dirs[j])) < np.sin(np.radians(30.0)):
                    ok = False
        if ok:
            break
    pts, labels = [], []
    for idx, (a, b) in enumerate(segs):
        t = np.linspace(0.0, 1.0, points_per)
        pts.append(a[None, :] + t[:, None] * (b - a)[None, :])
        labels.append(np.full(points_per, idx, dtype=np.int64))
    points = np.concatenate(pts) + rng.normal(0.0, noise_sd, size=(n_components * points_per, 2))
    return points, np.concatenate(labels)


def _gen_mixed2d(rng, points_per, noise_sd):
    # four curves, each a segment or a shallow parabola arc; chord directions
    # kept >= 30 degrees apart so tangent ranges stay distinguishable
    box_lo, box_hi = np.zeros(2), np.ones(2)
    while True:
        segs = [_random_segment(rng, box_lo, box_hi, 0.7) for _ in range(4)]
        dirs = [(b - a) / np.linalg.norm(b - a) for a, b in segs]
        ok = True
        for i in range(len(dirs)):
            for j in range(i + 1, len(dirs)):
                if abs(_cross2(dirs[i], dirs[j])) < np.sin(np.radians(30.0)):
                    ok = False
        if ok:
            break
    pts, labels = [], []
    for idx, (a, b) in enumerate(segs):
        t = np.linspace(0.0, 1.0, points_per)
        base = a[None, :] + t[:, None] * (b - a)[None, :]
        if rng.random() < 0.5:
            chord = float(np.linalg.norm(b - a))
            direction = (b - a) / chord
            normal = np.array([-direction[1], direction[0]])
            amp = rng.uniform(0.02, 0.05) * chord * np.sign(rng.random() - 0.5)
            base = base + (amp * ((t - 0.5) ** 2 * 4 - 1))[:, None] * normal[None, :]
        pts.append(base)
        labels.append(np.full(points_per, idx, dtype=np.int64))
    points = np.concatenate(pts) + rng.normal(0.0, noise_sd, size=(4 * points_per, 2))
    return points, np.concatenate(labels)


def _gen_planes3d(rng, grid_per_side, noise_sd):
    # three plane patches with dihedral angles >= 40 degrees, each a uniform grid
    while True:
        normals = rng.normal(size=(3, 3))
        normals /= np.linalg.norm(normals, axis=1, keepdims=True)
        ok = True
        for i in range(3):
            for j in range(i + 1, 3):
                if abs(np.dot(normals[i], normals[j])) > np.cos(np.radians(40.0)):
                    ok = False
        if ok:
            break
    pts, labels = [], []
    u = np.linspace(-0.5, 0.5, grid_per_side)
    uu, vv = np.meshgrid(u, u, indexing="ij")
    for idx in range(3):
        n = normals[idx]
        e1 = np.cross(n, [1.0, 0.0, 0.0])
        if np.linalg.norm(e1) < 1e-8:
            e1 = np.cross(n, [0.0, 1.0, 0.0])
        e1 /= np.linalg.norm(e1)
        e2 = np.cross(n, e1)
        center = rng.uniform(-0.25, 0.25, size=3)
        patch = center[None, :] + uu.ravel()[:, None] * e1[None, :] + vv.ravel()[:, None] * e2[None, :]
        pts.append(patch)
        labels.append(np.full(patch.shape[0], idx, dtype=np.int64))
    points = np.concatenate(pts)
    if noise_sd > 0:
        points = points + rng.normal(0.0, noise_sd, size=points.shape)
    return points, np.concatenate(labels)


ARRANGEMENT_KINDS = ("lines2d", "mixed_curves2d", "planes3d")


def gen_arrangement_suite(
    kind: str,
    n_samples: int,
    seed: int = 0,
    points_per_component: int = 150,
    noise_sd: float = 0.008,
) -> list[LabeledDataset]:
    """Generate a suite of random labeled arrangements of a given kind.

    Kinds: ``lines2d`` (3 segments in R^2), ``mixed_curves2d`` (4 segments or
    parabola arcs in R^2), ``planes3d`` (3 plane patches in R^3, each a
    uniform grid).  Box sizes, lengths and angle separations are generator
    parameters with the defaults documented here, since only the arrangement
    types and sample counts are prescribed by the benchmark protocol.
    Reproducible: sample i is drawn from a Philox stream keyed seed XOR i.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    if kind not in ARRANGEMENT_KINDS:
        raise ValueError(f"unknown arrangement kind: {kind!r}")
    suite = []
    for i in range(n_samples):
        rng = _philox(seed, stream=i + 1)
        if kind == "lines2d":
            points, labels = _gen_lines2d(rng, 3, points_per_component, noise_sd)
        elif kind == "mixed_curves2d":
            points, labels = _gen_mixed2d(rng, points_per_component, noise_sd)
        else:
            side = max(4, int(round(math.sqrt(points_per_component))))
            points, labels = _gen_planes3d(rng, side, noise_sd)
        suite.append(LabeledDataset(empirical_measure(points), labels, f"{kind} sample {i}"))
    return suite


# ---------------------------------------------------------------------------
# I/O: CSV (one row per atom) and JSON mirror
# ---------------------------------------------------------------------------

def _format_row(values) -> str:
    return ",".join(repr(float(v)) for v in values)


def save_measure(obj, path) -> None:
    """Write a WeightedMeasure or LabeledDataset to CSV or JSON (by suffix).

    CSV columns: x_1,..,x_d,weight[,label] with a mandatory header row.
    Floats are serialized with shortest round-tripping decimal repr, so a
    save/load cycle is bit-exact.
    """
    path = str(path)
    labels = None
    if isinstance(obj, LabeledDataset):
        measure, labels = obj.measure, obj.labels
    else:
        measure = obj
    if path.endswith(".json"):
        doc = {
            "dim": measure.dim,
            "atoms": [[float(v) for v in row] for row in measure.atoms],
            "weights": [float(w) for w in measure.weights],
        }
        if labels is not None:
            doc["labels"] = [int(v) for v in labels]
        with open(path, "w") as fh:
            json.dump(doc, fh)
            fh.write("\n")
        return
    d = measure.dim
    header = [f"x_{i + 1}" for i in range(d)] + ["weight"]
    if labels is not None:
        header.append("label")
    lines = [",".join(header)]
    for i in range(measure.size):
        row = _format_row(measure.atoms[i]) + "," + repr(float(measure.weights[i]))
        if labels is not None:
            row += f",{int(labels[i])}"
        lines.append(row)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_measure(path):
    """Load a WeightedMeasure or LabeledDataset written by :func:`save_measure`.

    Returns a LabeledDataset when a label column is present, otherwise a
    WeightedMeasure.  Malformed rows raise :class:`MeasureFormatError`
    naming the offending line.
    """
    path = str(path)
    if path.endswith(".json"):
        with open(path) as fh:
            doc = json.load(fh)
        atoms = np.asarray(doc["atoms"], dtype=float)
        weights = np.asarray(doc["weights"], dtype=float)
        if np.any(weights <= 0):
            raise MeasureFormatError("weights must be positive")
        m = WeightedMeasure(atoms, weights)
        if "labels" in doc:
            return LabeledDataset(m, np.asarray(doc["labels"], dtype=np.int64))
        return m
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    lines = [ln for ln in lines if ln.strip()]
    if not lines:
        raise MeasureFormatError("empty file")
    header = [c.strip() for c in lines[0].split(",")]
    if "weight" not in header:
        raise MeasureFormatError("line 1: header must contain a 'weight' column")
    has_label = header[-1] == "label"
    d = len(header) - 1 - (1 if has_label else 0)
    if d < 1:
        raise MeasureFormatError("line 1: no coordinate columns")
    ncol = len(header)
    atoms, weights, labels = [], [], []
    for lineno, ln in enumerate(lines[1:], start=2):
        cells = ln.split(",")
        if len(cells) != ncol:
            raise MeasureFormatError(
                f"line {lineno}: expected {ncol} columns, found {len(cells)}"
            )
        try:
            vals = [float(c) for c in cells[: d + 1]]
        except ValueError as exc:
            raise MeasureFormatError(f"line {lineno}: {exc}") from None
        atoms.append(vals[:d])
        if vals[d] <= 0:
            raise MeasureFormatError(f"line {lineno}: weights must be positive")
        weights.append(vals[d])
        if has_label:
            try:
                labels.append(int(cells[-1]))
            except ValueError as exc:
                raise MeasureFormatError(f"line {lineno}: {exc}") from None
    m = WeightedMeasure(np.asarray(atoms), np.asarray(weights))
    if has_label:
        return LabeledDataset(m, np.asarray(labels, dtype=np.int64))
    return m
