"""Command-line front end.

Subcommands: gen, ctf, spectrum, frechet, flow, curvature, cluster,
stability, converge, bench.  Global flags: --config (JSON file of
per-command defaults, overridden by explicit flags), --seed, --out,
--threads.  Exit codes: 0 success, 2 configuration error, 3 numerical
failure; errors print a single-line JSON object on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import clustering as cl
from . import experiments, plots
from .fields import NumericalError, basin_labels, ctf_grid
from .geometry import curve_curvature, surface_curvatures
from .kernels import kernel_by_name, load_profile_csv
from .measures import (
    LabeledDataset,
    gen_line_arrangement,
    load_measure,
    quadrature_circle,
    quadrature_segment,
    quadrature_sphere,
    save_measure,
)
from .transport import check_stability_smooth, check_stability_trunc


def _fail(code: int, kind: str, message: str) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    return code


def _resolve_kernel(name: str):
    if name.endswith(".csv"):
        return load_profile_csv(name)
    return kernel_by_name(name)


def _parse_grid(spec: str) -> np.ndarray:
    """Grid spec lo:hi:n (2-D square grid) or a CSV/JSON file of points."""
    if os.path.exists(spec):
        m = load_measure(spec)
        measure = m.measure if isinstance(m, LabeledDataset) else m
        return measure.atoms
    try:
        lo, hi, n = spec.split(":")
        return experiments.square_grid(float(lo), float(hi), int(n))
    except ValueError:
        raise ValueError(f"grid must be 'lo:hi:n' or an existing points file, got {spec!r}")


def _outpath(args, name: str) -> str:
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, name)


def _load_plain_measure(path):
    m = load_measure(path)
    return m.measure if isinstance(m, LabeledDataset) else m


def _cmd_gen(args) -> int:
    if args.kind == "segment":
        obj = quadrature_segment(json.loads(args.a), json.loads(args.b), args.spacing)
    elif args.kind == "circle":
        obj = quadrature_circle(args.radius, args.n)
    elif args.kind == "sphere":
        obj = quadrature_sphere(args.radius, args.n, args.n)
    elif args.kind == "lines":
        segments = [(tuple(seg), args.points_per_line) for seg in json.loads(args.segments)]
        box = json.loads(args.box) if args.box else None
        obj = gen_line_arrangement(
            segments, noise_sd=args.noise_sd, n_outliers=args.outliers,
            bounding_box=box, seed=args.seed,
        )
    else:
        raise ValueError(f"unknown gen kind {args.kind!r}")
    path = _outpath(args, args.output)
    save_measure(obj, path)
    print(path)
    return 0


def _cmd_ctf(args) -> int:
    measure = _load_plain_measure(args.input)
    kernel = _resolve_kernel(args.kernel)
    grid = _parse_grid(args.grid)
    accel = "indexed" if args.indexed else "exact"
    fg = ctf_grid(measure, kernel, grid, args.sigma, acceleration=accel)
    path = _outpath(args, args.output)
    fg.save_csv(path)
    print(path)
    return 0


def _cmd_frechet(args) -> int:
    measure = _load_plain_measure(args.input)
    kernel = _resolve_kernel(args.kernel)
    grid = _parse_grid(args.grid)
    fg = ctf_grid(measure, kernel, grid, args.sigma)
    path = _outpath(args, args.output)
    d = grid.shape[1]
    lines = [",".join([f"x_{i + 1}" for i in range(d)] + ["sigma", "V"])]
    for x, v in zip(fg.query_points, fg.frechet_values):
        lines.append(",".join([repr(float(c)) for c in x] + [repr(float(args.sigma)), repr(float(v))]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    if args.heatmap:
        n = int(round(len(grid) ** 0.5))
        if n * n == len(grid):
            axis = np.unique(grid[:, 0])
            plots.emit_plot(
                "field_heatmap",
                {"x": axis, "y": axis, "values": fg.frechet_values.reshape(n, n).T},
                _outpath(args, args.heatmap),
            )
    print(path)
    return 0


def _cmd_flow(args) -> int:
    measure = _load_plain_measure(args.input)
    kernel = _resolve_kernel(args.kernel)
    starts = _parse_grid(args.starts)
    labels, attractors, results = basin_labels(measure, kernel, starts, args.sigma)
    path = _outpath(args, args.output)
    d = starts.shape[1]
    head = [f"x_{i + 1}" for i in range(d)] + [f"attractor_{i + 1}" for i in range(d)]
    lines = [",".join(head + ["basin", "converged"])]
    for res, lab in zip(results, labels):
        cells = [repr(float(v)) for v in res.start] + [repr(float(v)) for v in res.attractor]
        lines.append(",".join(cells + [str(int(lab)), str(int(res.converged))]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    print(path)
    return 0


def _cmd_curvature(args) -> int:
    measure = _load_plain_measure(args.input)
    point = json.loads(args.point)
    ladder = [float(s) for s in args.ladder.split(",")]
    path = _outpath(args, args.output)
    if args.surface:
        est = surface_curvatures(measure, point, ladder)
        header = "point,sigma_ladder,kappa1,kappa2,residual_trace,residual_det,sign_ambiguity"
        row = ";".join(repr(float(v)) for v in est.point)
        lad = ";".join(repr(float(v)) for v in est.sigma_ladder)
        line = f"{row},{lad},{est.kappa1!r},{est.kappa2!r},{est.residual_trace!r},{est.residual_det!r},{int(est.sign_ambiguity)}"
    else:
        est = curve_curvature(measure, point, ladder)
        header = "point,sigma_ladder,kappa_abs,residual,clamped"
        row = ";".join(repr(float(v)) for v in est.point)
        lad = ";".join(repr(float(v)) for v in est.sigma_ladder)
        line = f"{row},{lad},{est.kappa_abs!r},{est.residual!r},{int(est.clamped)}"
    with open(path, "w") as fh:
        fh.write(header + "\n" + line + "\n")
    print(path)
    return 0


def _cmd_cluster(args) -> int:
    ds = load_measure(args.input)
    measure = ds.measure if isinstance(ds, LabeledDataset) else ds
    kernel = _resolve_kernel(args.kernel)
    params = cl.TensorizedMetricParams(gamma=args.gamma, sigma=args.sigma, kernel=kernel)
    dist = cl.tensorized_distances(measure, params)
    dend = cl.single_linkage(dist)
    mode, value = args.cut.split(":")
    if mode == "k":
        assignment = cl.cut(dend, k=int(value))
    elif mode == "h":
        assignment = cl.cut(dend, height=float(value))
    else:
        raise ValueError("cut must be 'k:<count>' or 'h:<height>'")
    if args.topk:
        assignment = cl.topk_reassign(assignment, dist, args.topk)
    labeled = LabeledDataset(measure, assignment.labels)
    out_points = _outpath(args, args.output)
    save_measure(labeled, out_points)
    merges_path = _outpath(args, args.merges)
    lines = ["a,b,height"] + [
        f"{int(a)},{int(b)},{repr(float(h))}" for a, b, h in dend.merges
    ]
    with open(merges_path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    if args.svg:
        plots.emit_plot("dendrogram", {"dendrogram": dend}, _outpath(args, args.svg))
    if isinstance(ds, LabeledDataset):
        err = cl.score(assignment.labels, ds.labels)
        print(json.dumps({"labeled_csv": out_points, "merges_csv": merges_path, "error_rate": err}))
    else:
        print(json.dumps({"labeled_csv": out_points, "merges_csv": merges_path}))
    return 0


def _cmd_stability(args) -> int:
    alpha = _load_plain_measure(args.alpha)
    beta = _load_plain_measure(args.beta)
    grid = _parse_grid(args.grid)
    if args.kernel == "truncation":
        if args.lam is None or args.diameter is None:
            raise ValueError("truncation stability needs --lam and --diameter")
        report = check_stability_trunc(alpha, beta, args.sigma, args.diameter, args.lam, grid)
    else:
        kernel = _resolve_kernel(args.kernel)
        report = check_stability_smooth(alpha, beta, kernel, args.sigma, grid)
    path = _outpath(args, args.output)
    with open(path, "w") as fh:
        json.dump(report.to_dict(), fh, indent=2)
        fh.write("\n")
    print(json.dumps(report.to_dict()))
    return 0


def _cmd_converge(args, cfg_file: dict) -> int:
    cfg = experiments.ConvergeConfig(**cfg_file)
    if args.seed is not None:
        cfg.seed = args.seed
    cfg.threads = args.threads
    cfg.out_dir = args.out
    if args.n_values:
        cfg.n_values = tuple(int(v) for v in args.n_values.split(","))
    if args.replicates:
        cfg.replicates = args.replicates
    report = experiments.run_converge(cfg)
    print(report.to_json())
    return 0


def _cmd_bench(args, cfg_file: dict) -> int:
    cfg = experiments.BenchmarkConfig(**cfg_file)
    cfg.kind = args.kind
    if args.seed is not None:
        cfg.seed = args.seed
    if args.n_samples:
        cfg.n_samples = args.n_samples
    if args.n_train:
        cfg.n_train = args.n_train
    cfg.threads = args.threads
    cfg.out_dir = args.out
    result = experiments.run_cluster_benchmark(cfg)
    print(result.to_json())
    return 0


class _Parser(argparse.ArgumentParser):
    """Parser that reports errors as exceptions for uniform JSON output."""

    def error(self, message):
        raise ValueError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="covfields")
    p.add_argument("--config", help="JSON file with per-command default parameters")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--threads", type=int, default=1)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate measures and datasets")
    g.add_argument("--kind", required=True, choices=["segment", "circle", "sphere", "lines"])
    g.add_argument("--a", default="[0,0]")
    g.add_argument("--b", default="[1,0]")
    g.add_argument("--spacing", type=float, default=0.01)
    g.add_argument("--radius", type=float, default=1.0)
    g.add_argument("--n", type=int, default=1000)
    g.add_argument("--segments", default="[]", help='JSON [[[x,y],[x,y]], ...]')
    g.add_argument("--points-per-line", type=int, default=200)
    g.add_argument("--noise-sd", type=float, default=0.0)
    g.add_argument("--outliers", type=int, default=0)
    g.add_argument("--box", default=None, help="JSON [[lo...],[hi...]]")
    g.add_argument("--output", default="measure.csv")

    for name in ("ctf", "spectrum"):
        c = sub.add_parser(name, help="evaluate the covariance field on a grid")
        c.add_argument("--input", required=True)
        c.add_argument("--kernel", default="truncation")
        c.add_argument("--sigma", type=float, required=True)
        c.add_argument("--grid", required=True, help="lo:hi:n or points file")
        c.add_argument("--indexed", action="store_true")
        c.add_argument("--output", default=f"{name}.csv")

    f = sub.add_parser("frechet", help="evaluate the Fréchet function on a grid")
    f.add_argument("--input", required=True)
    f.add_argument("--kernel", default="gaussian")
    f.add_argument("--sigma", type=float, required=True)
    f.add_argument("--grid", required=True)
    f.add_argument("--heatmap", default=None, help="optional SVG filename")
    f.add_argument("--output", default="frechet.csv")

    fl = sub.add_parser("flow", help="gradient flow to attractors")
    fl.add_argument("--input", required=True)
    fl.add_argument("--kernel", default="gaussian")
    fl.add_argument("--sigma", type=float, required=True)
    fl.add_argument("--starts", required=True, help="lo:hi:n or points file")
    fl.add_argument("--output", default="flow.csv")

    cv = sub.add_parser("curvature", help="curvature recovery from small scales")
    cv.add_argument("--input", required=True)
    cv.add_argument("--point", required=True, help="JSON coordinates")
    cv.add_argument("--ladder", required=True, help="comma-separated scales")
    cv.add_argument("--surface", action="store_true")
    cv.add_argument("--output", default="curvature.csv")

    cc = sub.add_parser("cluster", help="tensorized single-linkage clustering")
    cc.add_argument("--input", required=True)
    cc.add_argument("--kernel", default="gaussian")
    cc.add_argument("--sigma", type=float, required=True)
    cc.add_argument("--gamma", type=float, default=0.0)
    cc.add_argument("--cut", required=True, help="'k:<count>' or 'h:<height>'")
    cc.add_argument("--topk", type=int, default=None)
    cc.add_argument("--output", default="clusters.csv")
    cc.add_argument("--merges", default="merges.csv")
    cc.add_argument("--svg", default=None)

    st = sub.add_parser("stability", help="stability certificate for a measure pair")
    st.add_argument("--alpha", required=True)
    st.add_argument("--beta", required=True)
    st.add_argument("--kernel", default="gaussian")
    st.add_argument("--sigma", type=float, required=True)
    st.add_argument("--grid", required=True)
    st.add_argument("--lam", type=float, default=None, help="density bound (truncation)")
    st.add_argument("--diameter", type=float, default=None, help="support diameter bound")
    st.add_argument("--output", default="stability.json")

    cvg = sub.add_parser("converge", help="empirical convergence-rate study")
    cvg.add_argument("--n-values", default=None, help="comma-separated ladder")
    cvg.add_argument("--replicates", type=int, default=None)

    b = sub.add_parser("bench", help="clustering benchmark on arrangement suites")
    b.add_argument("--kind", default="lines2d", choices=list(experiments._TRUE_K))
    b.add_argument("--n-samples", type=int, default=None)
    b.add_argument("--n-train", type=int, default=None)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help
        return 0 if exc.code in (0, None) else 2
    except ValueError as exc:
        return _fail(2, "config", str(exc))
    cfg_file: dict = {}
    try:
        if args.config:
            with open(args.config) as fh:
                all_cfg = json.load(fh)
            cfg_file = all_cfg.get(args.command, {})
        if args.command == "gen":
            if args.seed is None:
                args.seed = 0
            return _cmd_gen(args)
        if args.command in ("ctf", "spectrum"):
            return _cmd_ctf(args)
        if args.command == "frechet":
            return _cmd_frechet(args)
        if args.command == "flow":
            return _cmd_flow(args)
        if args.command == "curvature":
            return _cmd_curvature(args)
        if args.command == "cluster":
            return _cmd_cluster(args)
        if args.command == "stability":
            return _cmd_stability(args)
        if args.command == "converge":
            return _cmd_converge(args, cfg_file)
        if args.command == "bench":
            return _cmd_bench(args, cfg_file)
        return _fail(2, "config", f"unknown command {args.command!r}")
    except NumericalError as exc:
        return _fail(3, "numerical", str(exc))
    except (ValueError, OSError, KeyError, json.JSONDecodeError) as exc:
        return _fail(2, "config", str(exc))


if __name__ == "__main__":
    sys.exit(main())
