"""Command-line interface.

Subcommands: simulate, covariance, bounds, rate-sweep, verify, plot. All of
them read a JSON experiment config; LSA_GAUSS_SEED overrides its master seed.
Exit codes: 0 pass, 1 assertion failure, 2 invalid config, 3 inconclusive
results only.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import bounds as bounds_mod
from . import covariance as cov_mod
from .experiments import (
    CSV_HEADER,
    ExperimentConfig,
    _g17,
    emit,
    parse_rows_csv,
    rate_sweep,
    run_replicas,
    verify_suite,
)

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_BAD_CONFIG = 2
EXIT_INCONCLUSIVE = 3


def _load_config(path: str) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as handle:
        config = ExperimentConfig.from_json(handle.read())
    env_seed = os.environ.get("LSA_GAUSS_SEED")
    if env_seed is not None:
        config = ExperimentConfig(
            instance=config.instance,
            grid=config.grid,
            replicas=config.replicas,
            ladder_depth=config.ladder_depth,
            num_directions=config.num_directions,
            dkw_delta=config.dkw_delta,
            master_seed=int(env_seed),
            output_path=config.output_path,
            output_format=config.output_format,
            bootstrap_resamples=config.bootstrap_resamples,
            theta0_override=config.theta0_override,
        )
    return config


def _matrix(a: np.ndarray) -> list:
    return [[float(x) for x in row] for row in np.atleast_2d(a)]


def _cmd_simulate(args) -> int:
    config = _load_config(args.config)
    out = args.out or config.output_path or "samples.csv"
    for idx, point in enumerate(config.grid):
        samples = run_replicas(config, point)
        path = out if len(config.grid) == 1 else f"{out}.point{idx}"
        header = ",".join(f"err_{j + 1}" for j in range(samples.shape[1]))
        lines = [header] + [",".join(_g17(v) for v in row) for row in samples]
        with open(path, "w", encoding="utf-8") as handle:
            handle.write("\n".join(lines) + "\n")
        print(f"wrote {samples.shape[0]}x{samples.shape[1]} rescaled errors to {path}")
        if args.trajectories:
            _dump_trajectories(config, idx, point, args.trajectories, f"{path}.traj")
    return EXIT_PASS


def _dump_trajectories(config, point_index: int, point, count: int, path: str) -> None:
    """Full error paths theta_k - theta* of the first ``count`` replicas,
    replayed from the replica streams that produced the samples."""
    from .backend import get_kernels
    from .experiments import PURPOSE_PATH, derive_stream
    from .model import noise_at_optimum, sample_pairs

    alpha, n = point
    instance = config.instance
    e0 = config.theta0 - instance.optimum
    header = "path,k," + ",".join(f"err_{j + 1}" for j in range(instance.dim))
    lines = [header]
    for r in range(min(count, config.replicas)):
        rng = derive_stream(config.master_seed, point_index, r, PURPOSE_PATH)
        xs, ys = sample_pairs(instance, rng, n)
        eps = noise_at_optimum(instance, xs, ys)
        hist = get_kernels().sgd_error_history(xs[None], eps[None], alpha, e0)[0]
        for k, row in enumerate(hist):
            lines.append(f"{r},{k}," + ",".join(_g17(v) for v in row))
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines) + "\n")
    print(f"wrote {min(count, config.replicas)} trajectories to {path}")


def _cmd_covariance(args) -> int:
    config = _load_config(args.config)
    instance = config.instance
    triple = cov_mod.covariance_triple(instance, args.alpha, args.n)
    p1 = cov_mod.prop1_gap(instance, args.alpha, args.n)
    p2 = cov_mod.prop2_gap(instance, args.alpha)
    lb = cov_mod.covariance_lower_bound(instance, args.alpha, args.n)
    doc = {
        "sigma_alpha_n": _matrix(triple.sigma_alpha_n),
        "sigma_alpha": _matrix(triple.sigma_alpha),
        "sigma_lyap": _matrix(triple.sigma_lyap),
        "residuals": {
            "riccati": triple.residual_riccati,
            "lyapunov": triple.residual_lyapunov,
        },
        "prop1": {
            "measured": p1.measured,
            "paper_bound": p1.paper_bound,
            "corrected_bound": p1.corrected_bound,
        },
        "prop2": {"measured": p2.measured, "bound": p2.bound},
        "lower_bound": {
            "measured": lb.measured_min_eig,
            "paper_const": lb.paper_const,
            "corrected_const": lb.corrected_const,
            "precondition_ok": lb.precondition_ok,
        },
    }
    print(json.dumps(doc, indent=2, sort_keys=True))
    return EXIT_PASS


def _bound_report_dict(report) -> dict:
    return {
        "c_delta": [float(c) for c in report.c_delta],
        "c1": report.c1,
        "c2": report.c2,
        "c_d": report.c_d,
        "c_d2": report.c_d2,
        "theorem1_rhs": report.theorem1_rhs,
        "inputs": {
            "alpha": report.inputs.alpha,
            "n": report.inputs.n,
            "init_offset": report.inputs.init_offset,
            "dim": report.inputs.dim,
            "design_norm": report.inputs.design_norm,
            "min_eig": report.inputs.min_eig,
            "noise_min_eig": report.inputs.noise_min_eig,
            "noise_trace": report.inputs.noise_trace,
            "noise_norm": report.inputs.noise_norm,
            "noise_abs_moment3": report.inputs.noise_abs_moment3,
            "feature_bound": report.inputs.feature_bound,
            "lyap_norm": report.inputs.lyap_norm,
        },
    }


def _cmd_bounds(args) -> int:
    config = _load_config(args.config)
    instance = config.instance
    theta0 = config.theta0
    if args.csv:
        if (args.alpha is None) != (args.n is None):
            print("bounds --csv takes either both --alpha and --n or neither", file=sys.stderr)
            return EXIT_BAD_CONFIG
        grid = config.grid if args.alpha is None else ((args.alpha, args.n),)
        cols = (
            ["alpha", "n"]
            + [f"c_delta_{i}" for i in range(7)]
            + ["c1", "c2", "c_d", "c_d2", "theorem1_rhs"]
        )
        lines = [",".join(cols)]
        for alpha, n in grid:
            rep = bounds_mod.compute_constants(instance, alpha, n, theta0)
            cells = [_g17(alpha), str(n)]
            cells += [_g17(c) for c in rep.c_delta]
            cells += [_g17(rep.c1), _g17(rep.c2), _g17(rep.c_d), _g17(rep.c_d2)]
            cells += [_g17(rep.theorem1_rhs)]
            lines.append(",".join(cells))
        print("\n".join(lines))
        return EXIT_PASS
    if args.alpha is None or args.n is None:
        print("bounds requires --alpha and --n (or --csv with a config grid)", file=sys.stderr)
        return EXIT_BAD_CONFIG
    report = bounds_mod.compute_constants(instance, args.alpha, args.n, theta0)
    print(json.dumps(_bound_report_dict(report), indent=2, sort_keys=True))
    return EXIT_PASS


def _cmd_rate_sweep(args) -> int:
    config = _load_config(args.config)
    result = rate_sweep(config)
    if config.output_path:
        emit(result.rows, config.output_format, config.output_path)
    doc = {
        "slope": result.slope,
        "slope_ci": list(result.slope_ci),
        "all_conclusive": result.all_conclusive,
        "points": [
            {
                "alpha": row.alpha,
                "n": row.n,
                "distance": row.distance,
                "ci": row.distance_ci,
                "conclusive": row.conclusive,
            }
            for row in result.rows
        ],
    }
    print(json.dumps(doc, indent=2, sort_keys=True))
    return EXIT_PASS if result.all_conclusive else EXIT_INCONCLUSIVE


def _cmd_verify(args) -> int:
    config = _load_config(args.config)
    report = verify_suite(config, quick=args.quick)
    text = report.to_json()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            handle.write(text)
    print(text, end="")
    return report.exit_code


def _svg_scatter(rows: list[dict], out: str) -> None:
    """Static log-log scatter of distance vs alpha with the fitted slope line."""
    width, height, margin = 640, 480, 60
    xs = [math.log10(r["alpha"]) for r in rows]
    ys = [math.log10(max(r["distance"], 1e-300)) for r in rows]
    x_lo, x_hi = min(xs) - 0.1, max(xs) + 0.1
    y_lo, y_hi = min(ys) - 0.1, max(ys) + 0.1

    def px(x):
        return margin + (x - x_lo) / (x_hi - x_lo) * (width - 2 * margin)

    def py(y):
        return height - margin - (y - y_lo) / (y_hi - y_lo) * (height - 2 * margin)

    slope = np.polyfit(xs, ys, 1)
    fit = [
        (px(x_lo), py(slope[0] * x_lo + slope[1])),
        (px(x_hi), py(slope[0] * x_hi + slope[1])),
    ]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" '
        f'stroke="black"/>',
        f'<line x1="{fit[0][0]:.2f}" y1="{fit[0][1]:.2f}" x2="{fit[1][0]:.2f}" '
        f'y2="{fit[1][1]:.2f}" stroke="steelblue" stroke-width="1.5"/>',
        f'<text x="{width / 2:.0f}" y="{height - margin / 3:.0f}" '
        f'text-anchor="middle" font-size="14">log10 alpha</text>',
        f'<text x="{margin / 3:.0f}" y="{height / 2:.0f}" text-anchor="middle" '
        f'font-size="14" transform="rotate(-90 {margin / 3:.0f} {height / 2:.0f})">'
        "log10 distance</text>",
        f'<text x="{width - margin:.0f}" y="{margin:.0f}" text-anchor="end" '
        f'font-size="14">slope = {slope[0]:.3f}</text>',
    ]
    for x, y in zip(xs, ys):
        parts.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="4" fill="crimson"/>')
    parts.append("</svg>")
    with open(out, "w", encoding="utf-8") as handle:
        handle.write("\n".join(parts) + "\n")


def _cmd_plot(args) -> int:
    rows = parse_rows_csv(args.infile)
    if not rows:
        print("no rows to plot", file=sys.stderr)
        return EXIT_BAD_CONFIG
    _svg_scatter(rows, args.out)
    print(f"wrote {args.out}")
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lsa-gauss",
        description="Constant-step SGD for online linear regression with "
        "Gaussian-approximation verification tooling.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate replicas and dump rescaled errors")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.add_argument(
        "--trajectories",
        type=int,
        default=0,
        metavar="N",
        help="also dump the first N full error paths per grid point",
    )
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("covariance", help="emit the covariance triple and gap reports")
    p.add_argument("--config", required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(func=_cmd_covariance)

    p = sub.add_parser("bounds", help="emit the bound constants report")
    p.add_argument("--config", required=True)
    p.add_argument("--alpha", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--csv", action="store_true", help="one row per config grid point")
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("rate-sweep", help="distance-vs-alpha sweep with fitted slope")
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_rate_sweep)

    p = sub.add_parser("verify", help="run the verification suite")
    p.add_argument("--config", required=True)
    p.add_argument("--quick", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("plot", help="log-log scatter of a sweep CSV as SVG")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_plot)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError, OSError, json.JSONDecodeError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    except AssertionError as err:
        print(f"assertion failure: {err}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
