"""Command-line front end: solvers, simulation, diagnostics, verification.

Subcommands:
  solve-mp          density/CDF of the covariance-correlation limit law
  solve-elliptical  density/CDF of the scaled-Gram limit law
  edge              largest-eigenvalue limit {c0, mu}
  simulate          eigenvalues of a simulated matrix, plus metadata
  diagnose          row-geometry diagnostics of a data set
  verify            Monte Carlo verification suites
  compare           KS distance between an eigenvalue file and a law CSV

All randomness flows from --seed (default 0). Numeric output is printed
with 17 significant digits and files end with a trailing newline, so any
command is byte-identical on rerun. RMT_THREADS caps internal parallelism
without affecting results. Exit codes: 0 success, 2 invalid input, 3
numerical failure, 4 verification-suite bound violation.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional

import numpy as np
from numpy.typing import NDArray

from ._serialize import json_dumps, write_density_csv, write_spectrum_csv
from .concentration import (
    angle_diagnostic,
    norm_diagnostic,
    population_covariance,
    report_to_json_dict,
    verify_copula,
    verify_lemma6,
    verify_quadform,
    verify_tightness,
)
from .elliptical_solver import (
    elliptical_density_grid_detailed,
    load_params_json,
    scaled_gram,
)
from .errors import NumericalError
from .experiments import ks_distance
from .linalg import (
    load_matrix_csv,
    load_spectrum_csv,
    sample_correlation,
    sample_covariance,
    sym_eigenvalues,
)
from .measures import load_measure_json
from .mp_solver import (
    SolverConfig,
    default_v_eps,
    density_grid_detailed,
    estimate_support,
    solve_edge,
)
from .samplers import load_model_json, model_to_json_dict, sample_model

DEFAULT_GRID_COUNT = 400
_PROBE_COUNT = 200

# Density threshold multiplier (times v_eps) for support detection.
_SUPPORT_MULT = 10.0

# Calibrated diagnostic thresholds; regression values, not theory.
_NORM_THRESHOLD = 0.35
_ANGLE_THRESHOLD = 0.2


def _emit_error(kind: str, message: str) -> None:
    sys.stderr.write(json_dumps({"error": kind, "message": message}) + "\n")


class _Parser(argparse.ArgumentParser):
    """Argument parser that reports usage errors as JSON on stderr."""

    def error(self, message: str) -> None:  # type: ignore[override]
        _emit_error("UsageError", message)
        raise SystemExit(2)


def _parse_grid(text: str) -> NDArray[np.float64]:
    parts = text.split(",")
    if len(parts) != 3:
        raise ValueError('grid must be "min,max,count"')
    lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
    if count < 2:
        raise ValueError("grid count must be >= 2")
    if not (hi > lo):
        raise ValueError("grid max must exceed grid min")
    return np.linspace(lo, hi, count)


def _solver_config(args: argparse.Namespace) -> SolverConfig:
    return SolverConfig(
        tol=args.tol, max_iters=args.max_iters, damping=args.damping, v_eps=args.v_eps
    )


def _add_solver_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--tol", type=float, default=1e-12, help="fixed-point residual target")
    sub.add_argument("--max-iters", type=int, default=10000, help="iteration cap")
    sub.add_argument("--damping", type=float, default=1.0, help="initial damping in (0,1]")
    sub.add_argument(
        "--v-eps", type=float, default=None, help="imaginary offset for density recovery"
    )
    sub.add_argument(
        "--grid", default=None, help='real grid "min,max,count"; default spans the support'
    )


def _print_json(args: argparse.Namespace, obj) -> None:
    text = json_dumps(obj) + "\n"
    if not getattr(args, "quiet", False):
        sys.stdout.write(text)
    out = getattr(args, "out_json", None)
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _refine_grid(
    probe_hi: float, solve_probe, v: float, count: int
) -> NDArray[np.float64]:
    """Default grid [max(0, a-0.5), b+0.5] around the detected support."""
    probe_xs = np.linspace(0.0, probe_hi, _PROBE_COUNT)
    xs, density, _, _ = solve_probe(probe_xs)
    support = estimate_support(xs, density, _SUPPORT_MULT * v)
    if support is None:
        a, b = 0.0, probe_hi
    else:
        a, b = support
    return np.linspace(max(0.0, a - 0.5), b + 0.5, count)


def cmd_solve_mp(args: argparse.Namespace) -> int:
    H = load_measure_json(args.h_file)
    rho = args.rho
    if not (rho > 0):
        raise ValueError("--rho must be positive")
    cfg = _solver_config(args)
    v = cfg.v_eps if cfg.v_eps is not None else default_v_eps(H, rho)
    if args.grid is not None:
        xs = _parse_grid(args.grid)
    else:
        # The bulk is always contained in [0, max(H)*(1+sqrt(rho))^2].
        probe_hi = H.support_max * (1.0 + np.sqrt(rho)) ** 2 * 1.5 + 1.0
        xs = _refine_grid(
            probe_hi,
            lambda p: density_grid_detailed(H, rho, p, cfg),
            v,
            DEFAULT_GRID_COUNT,
        )
    xs, density, cdf, stats = density_grid_detailed(H, rho, xs, cfg)
    support = estimate_support(xs, density, _SUPPORT_MULT * stats["v_eps"])
    write_density_csv(f"{args.out}.density.csv", xs, density, cdf)
    summary = {
        "rho": rho,
        "atom0_mass": stats["atom0_mass"],
        "support_estimate": list(support) if support is not None else None,
        "max_residual": stats["max_residual"],
        "v_eps": stats["v_eps"],
    }
    args.out_json = f"{args.out}.summary.json"
    _print_json(args, summary)
    return 0


def cmd_solve_elliptical(args: argparse.Namespace) -> int:
    params = load_params_json(args.params)
    cfg = _solver_config(args)
    v = cfg.v_eps if cfg.v_eps is not None else default_v_eps(params.H, params.rho)
    if args.grid is not None:
        xs = _parse_grid(args.grid)
    else:
        lam_sq = float(np.max(params.nu.values**2))
        probe_hi = (
            params.theta
            * lam_sq
            * params.H.support_max
            * (1.0 + np.sqrt(params.theta * params.rho)) ** 2
            * 1.5
            + 1.0
        )
        xs = _refine_grid(
            probe_hi,
            lambda p: elliptical_density_grid_detailed(params, p, cfg),
            v,
            DEFAULT_GRID_COUNT,
        )
    xs, density, cdf, stats = elliptical_density_grid_detailed(params, xs, cfg)
    support = estimate_support(xs, density, _SUPPORT_MULT * stats["v_eps"])
    write_density_csv(f"{args.out}.density.csv", xs, density, cdf)
    summary = {
        "theta": params.theta,
        "rho": params.rho,
        "xi": params.xi,
        "atom0_mass": stats["atom0_mass"],
        "support_estimate": list(support) if support is not None else None,
        "max_residual": stats["max_residual"],
        "max_consistency_residual": stats["max_consistency_residual"],
        "v_eps": stats["v_eps"],
    }
    args.out_json = f"{args.out}.summary.json"
    _print_json(args, summary)
    return 0


def cmd_edge(args: argparse.Namespace) -> int:
    H = load_measure_json(args.h_file)
    result = solve_edge(H, args.n_over_p)
    args.out_json = args.out
    _print_json(args, {"c0": result.c0, "mu": result.mu})
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    model = load_model_json(args.model)
    Y = sample_model(model, args.seed, 0)
    if args.matrix == "correlation":
        mat = sample_correlation(Y)
    elif args.matrix == "covariance":
        mat = sample_covariance(Y)
    else:
        mat = scaled_gram(Y, Y.shape[1], model.p, model.n)
    eigs = sym_eigenvalues(mat)
    write_spectrum_csv(f"{args.out}.eigs.csv", eigs)
    meta = {
        "model": model_to_json_dict(model),
        "seed": args.seed,
        "dims": {"n": model.n, "p": model.p, "d": model.d},
        "matrix": args.matrix,
    }
    args.out_json = f"{args.out}.meta.json"
    _print_json(args, meta)
    return 0


def cmd_diagnose(args: argparse.Namespace) -> int:
    if (args.data is None) == (args.model is None):
        raise ValueError("provide exactly one of --data or --model")
    trace = args.trace_sigma_over_p
    if args.data is not None:
        Y = load_matrix_csv(args.data)
    else:
        model = load_model_json(args.model)
        Y = sample_model(model, args.seed, 0)
        if trace is None:
            try:
                sigma = population_covariance(model)
                trace = float(np.trace(sigma)) / sigma.shape[0]
            except ValueError:
                trace = None
    if trace is None:
        trace = 1.0
    norm_values, norm_max = norm_diagnostic(Y, trace, center=args.center)
    angle_max, angle_hist = angle_diagnostic(Y)
    lo, hi = float(norm_values.min()), float(norm_values.max())
    # near-constant norms (e.g. sphere rows) underflow 50 finite bins
    if hi - lo < 50 * np.spacing(max(abs(lo), abs(hi), 1.0)):
        lo, hi = lo - 0.5, hi + 0.5
    norm_hist, norm_edges = np.histogram(norm_values, bins=50, range=(lo, hi))
    S = sample_covariance(Y)
    lemma5_stat = float(np.max(np.abs(np.sqrt(np.maximum(np.diag(S), 0.0)) - 1.0)))
    concentrated = norm_max <= args.norm_threshold and angle_max <= args.angle_threshold
    out = {
        "norm": {
            "histogram": norm_hist,
            "bin_edges": norm_edges,
            "max_deviation": norm_max,
            "target": trace,
        },
        "angle": {
            "histogram": angle_hist,
            "bin_edges": np.linspace(0.0, 1.0, angle_hist.size + 1),
            "max_offdiag": angle_max,
        },
        "lemma5_stat": lemma5_stat,
        "thresholds": {"norm": args.norm_threshold, "angle": args.angle_threshold},
        "concentrated": bool(concentrated),
    }
    args.out_json = args.out
    _print_json(args, out)
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    if args.suite == "lemma6":
        report, ok = verify_lemma6(reps=args.reps or 200, seed=args.seed)
    elif args.suite == "quadform":
        report, ok = verify_quadform(reps=args.reps or 20, seed=args.seed)
    elif args.suite == "copula":
        report, ok = verify_copula(seed=args.seed)
    else:
        report, ok = verify_tightness(seed=args.seed)
    args.out_json = args.out
    _print_json(args, report_to_json_dict(report, ok))
    return 0 if ok else 4


def cmd_compare(args: argparse.Namespace) -> int:
    eigs = load_spectrum_csv(args.eigs)
    law = np.loadtxt(args.law, delimiter=",", skiprows=1, ndmin=2)
    if law.ndim != 2 or law.shape[1] != 3:
        raise ValueError("law file must be an x,density,cdf CSV")
    ks = ks_distance(eigs, law[:, 0], law[:, 2])
    args.out_json = args.out
    _print_json(args, {"ks_distance": ks})
    return 0


def build_parser() -> _Parser:
    parser = _Parser(
        prog="rmtlaw",
        description="Limiting spectral laws of sample covariance/correlation "
        "matrices: solvers, simulation, diagnostics, verification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve-mp", help="solve the covariance/correlation limit law")
    p.add_argument("--h-file", required=True, help="population spectrum measure JSON")
    p.add_argument("--rho", type=float, required=True, help="aspect ratio p/n")
    p.add_argument("--out", required=True, help="output prefix for .density.csv/.summary.json")
    p.add_argument("--quiet", action="store_true", help="suppress stdout summary")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_solve_mp)

    p = sub.add_parser("solve-elliptical", help="solve the scaled-Gram limit law")
    p.add_argument("--params", required=True, help="EllipticalParams JSON file")
    p.add_argument("--out", required=True, help="output prefix for .density.csv/.summary.json")
    p.add_argument("--quiet", action="store_true", help="suppress stdout summary")
    _add_solver_flags(p)
    p.set_defaults(func=cmd_solve_elliptical)

    p = sub.add_parser("edge", help="largest-eigenvalue limit {c0, mu}")
    p.add_argument("--h-file", required=True, help="population spectrum measure JSON")
    p.add_argument("--n-over-p", type=float, required=True, help="aspect ratio n/p")
    p.add_argument("--out", default=None, help="optional JSON output file")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_edge)

    p = sub.add_parser("simulate", help="eigenvalues of a simulated matrix")
    p.add_argument("--model", required=True, help="model JSON file")
    p.add_argument(
        "--matrix",
        choices=("correlation", "covariance", "gram"),
        default="correlation",
        help="which matrix to decompose",
    )
    p.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    p.add_argument("--out", required=True, help="output prefix for .eigs.csv/.meta.json")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("diagnose", help="row-geometry diagnostics")
    p.add_argument("--data", default=None, help="data matrix CSV (rows = observations)")
    p.add_argument("--model", default=None, help="model JSON to simulate instead of --data")
    p.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    p.add_argument(
        "--trace-sigma-over-p",
        type=float,
        default=None,
        help="norm target; defaults to the model's trace(Sigma)/p, else 1",
    )
    p.add_argument("--center", action="store_true", help="center columns before norms")
    p.add_argument("--norm-threshold", type=float, default=_NORM_THRESHOLD)
    p.add_argument("--angle-threshold", type=float, default=_ANGLE_THRESHOLD)
    p.add_argument("--out", default=None, help="optional JSON output file")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("verify", help="Monte Carlo verification suites")
    p.add_argument(
        "--suite", required=True, choices=("lemma6", "quadform", "copula", "tightness")
    )
    p.add_argument("--reps", type=int, default=None, help="replicate count override")
    p.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    p.add_argument("--out", default=None, help="optional JSON output file")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("compare", help="KS distance of eigenvalues vs a law CSV")
    p.add_argument("--eigs", required=True, help="eigenvalue CSV (one per line)")
    p.add_argument("--law", required=True, help="x,density,cdf CSV from a solve command")
    p.add_argument("--out", default=None, help="optional JSON output file")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_compare)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit:
        raise
    except (ValueError, OSError) as exc:
        _emit_error(type(exc).__name__, str(exc))
        return 2
    except NumericalError as exc:
        _emit_error(type(exc).__name__, str(exc))
        return 3


if __name__ == "__main__":
    sys.exit(main())
