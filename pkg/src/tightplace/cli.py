"""Command-line frontend.

Subcommands::

    tightplace construct SCENARIO [--output PREFIX]   build a certified optimal placement
    tightplace check SCENARIO                         certify a placement given by positions
    tightplace simulate SCENARIO [--output PREFIX]    run the gradient-flow controller
    tightplace irregularity C1 C2 ... --dim D         classify a coefficient sequence

Exit codes: 0 success, 1 check failed, 2 infeasible construction, 3 flow
stalled at a non-optimal critical point, 4 flow timed out, 64 bad input,
65 degenerate geometry, 70 internal or numerical failure.
"""

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .coefficients import irregularity
from .construction import construct_detailed
from .errors import (ConstructionFailure, ContractError, DegenerateGeometryError,
                     InfeasibleError, NumericalFailure, PlacementError, StepSizeError,
                     UnsupportedError)
from .flow import FlowConfig, Outcome, simulate
from .geometry import Placement
from .optimality import DEFAULT_TOL
from .report import build_report
from .scenario import ScenarioParseError, format_scenario, load_scenario
from .sensors import coefficients_of

EXIT_OK = 0
EXIT_NOT_OPTIMAL = 1
EXIT_INFEASIBLE = 2
EXIT_CRITICAL = 3
EXIT_TIMED_OUT = 4
EXIT_USAGE = 64
EXIT_DEGENERATE = 65
EXIT_INTERNAL = 70

MAX_CSV_ROWS = 10_000

OUTCOME_EXIT = {
    Outcome.CONVERGED_OPTIMAL: EXIT_OK,
    Outcome.CONVERGED_CRITICAL: EXIT_CRITICAL,
    Outcome.TIMED_OUT: EXIT_TIMED_OUT,
}

log = logging.getLogger("tightplace")


class _Exit(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


def _load(path):
    try:
        return load_scenario(path)
    except ScenarioParseError as exc:
        raise _Exit(EXIT_USAGE, f"parse error: {exc}") from None
    except OSError as exc:
        raise _Exit(EXIT_USAGE, f"cannot read scenario: {exc}") from None


def _emit(report, fmt, out):
    out.write(report.to_json() + "\n" if fmt == "structured" else report.to_text())


def _write_report(report, prefix):
    Path(f"{prefix}.txt").write_text(report.to_text())
    Path(f"{prefix}.json").write_text(report.to_json() + "\n")


def cmd_construct(args, out):
    sc = _load(args.scenario)
    if sc.mode != "construct":
        raise _Exit(EXIT_USAGE, "construct needs sensors given by range, not position")
    specs = sc.specs()
    method = args.method or sc.method
    try:
        result = construct_detailed(coefficients_of(specs), sc.dimension, sc.ranges(),
                                    method=method, seed=args.seed)
    except (InfeasibleError, ContractError) as exc:
        raise _Exit(EXIT_INFEASIBLE, f"infeasible: {exc}") from None
    pl = Placement(result.placement.relative, sc.target)
    report = build_report(pl, specs, args.tol, method=result.method)
    _emit(report, args.format, out)
    if args.output:
        _write_report(report, args.output)
        Path(f"{args.output}.scenario").write_text(
            format_scenario(pl, specs, comment=f"constructed by method {result.method}"))
        if not args.no_figures:
            from .plotting import plot_placement
            plot_placement(pl, f"{args.output}.png", title=f"{result.method} placement",
                           coefficients=report.coefficients)
    return EXIT_OK if report.verdict else EXIT_INTERNAL


def cmd_check(args, out):
    sc = _load(args.scenario)
    if sc.mode != "simulate":
        raise _Exit(EXIT_USAGE, "check needs sensors given by position")
    pl = sc.placement()
    report = build_report(pl, sc.specs(), args.tol)
    _emit(report, args.format, out)
    if args.output:
        _write_report(report, args.output)
        if not args.no_figures:
            from .plotting import plot_placement
            plot_placement(pl, f"{args.output}.png", coefficients=report.coefficients)
    return EXIT_OK if report.verdict else EXIT_NOT_OPTIMAL


def _decimate(n_samples, n_sensors):
    """Uniform-stride sample indices keeping at most MAX_CSV_ROWS rows, plus the last sample."""
    budget = max(1, MAX_CSV_ROWS // n_sensors)
    if n_samples <= budget:
        return list(range(n_samples))
    if budget == 1:
        return [n_samples - 1]
    stride = math.ceil((n_samples - 1) / (budget - 1))
    idx = list(range(0, n_samples, stride))
    if idx[-1] != n_samples - 1:
        if len(idx) < budget:
            idx.append(n_samples - 1)
        else:
            idx[-1] = n_samples - 1
    return idx


def write_trajectory_csv(traj, path):
    """Write ``t, sensor, x, y[, z], V, optimality_error`` rows, at most 10^4 of them."""
    n, d = traj.relative.shape[1:]
    pos = traj.relative + traj.target
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "sensor", *"xyz"[:d], "V", "optimality_error"])
        for k in _decimate(len(traj), n):
            for i in range(n):
                w.writerow([repr(float(traj.times[k])), i, *(repr(float(v)) for v in pos[k, i]),
                            repr(float(traj.V[k])), repr(float(traj.error[k]))])


def cmd_simulate(args, out):
    sc = _load(args.scenario)
    if sc.mode != "simulate":
        raise _Exit(EXIT_USAGE, "simulate needs sensors given by initial position")
    config = sc.flow or FlowConfig()
    if args.seed is not None:
        config = FlowConfig(**{**config.__dict__, "seed": args.seed})
    pl = sc.placement()
    specs = sc.specs()
    try:
        traj = simulate(pl, specs, config)
    except StepSizeError as exc:
        raise _Exit(EXIT_INTERNAL, f"step-size error: {exc}") from None
    except NumericalFailure as exc:
        raise _Exit(EXIT_INTERNAL, f"numerical failure: {exc}") from None

    final = traj.final
    summary = {
        "outcome": traj.outcome.value,
        "t_final": float(traj.times[-1]),
        "restarts": traj.restarts,
        "optimality_error": float(traj.error[-1]),
        "V": float(traj.V[-1]),
        "max_range_drift": float(np.max(np.abs(traj.ranges / traj.ranges[0] - 1.0))),
    }
    if config.altitude_targets is not None:
        summary["max_altitude_error"] = float(
            np.max(np.abs(final.relative[:, 2] - np.asarray(config.altitude_targets))))
    if args.format == "structured":
        out.write(json.dumps(summary, indent=2) + "\n")
    else:
        for key, val in summary.items():
            out.write(f"{key:<20} {val:.12g}\n" if isinstance(val, float) else f"{key:<20} {val}\n")

    if args.output:
        write_trajectory_csv(traj, f"{args.output}.csv")
        final_specs = [type(s)(s.kind, s.sigma, float(r)) for s, r in zip(specs, final.ranges)]
        _write_report(build_report(final, final_specs, args.tol), args.output)
        if not args.no_figures:
            from .plotting import plot_error, plot_trajectory
            plot_trajectory(traj, f"{args.output}_paths.png")
            plot_error(traj, f"{args.output}_error.png")
    return OUTCOME_EXIT[traj.outcome]


def cmd_irregularity(args, out):
    values = np.array(args.coefficients, dtype=float)
    if values.size == 0 or not np.all(np.isfinite(values)) or np.any(values <= 0):
        raise _Exit(EXIT_USAGE, "coefficients must be finite and positive")
    if args.dim not in (2, 3):
        raise _Exit(EXIT_USAGE, "--dim must be 2 or 3")
    rep = irregularity(values, args.dim)
    info = {"k0": rep.k0, "regular": rep.regular,
            "dominant": [int(i) for i in rep.dominant],
            "residual": [int(i) for i in rep.residual]}
    if args.format == "structured":
        out.write(json.dumps(info) + "\n")
    else:
        out.write(f"k0        {rep.k0}\n")
        out.write(f"verdict   {'regular' if rep.regular else 'irregular'}\n")
        out.write(f"dominant  {info['dominant']}\n")
        out.write(f"residual  {info['residual']}\n")
    return EXIT_OK


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", "-o", help="path prefix for written files")
    common.add_argument("--tol", type=float, default=DEFAULT_TOL, help="certificate tolerance")
    common.add_argument("--seed", type=int, default=None, help="random seed")
    common.add_argument("--format", choices=("text", "structured"), default="text")
    common.add_argument("--no-figures", action="store_true", help="skip PNG output")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="tightplace", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("construct", parents=[common], help="build an optimal placement")
    p.add_argument("scenario")
    p.add_argument("--method", default=None, help="override the scenario's construction method")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("check", parents=[common], help="certify a placement")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("simulate", parents=[common], help="run the gradient-flow controller")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("irregularity", parents=[common], help="classify coefficients")
    p.add_argument("coefficients", nargs="+", type=float)
    p.add_argument("--dim", "-d", type=int, default=3)
    p.set_defaults(func=cmd_irregularity)
    return parser


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "construct" and args.seed is None:
        args.seed = 0
    if not (args.tol > 0 and math.isfinite(args.tol)):
        print("error: --tol must be positive", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args, out)
    except _Exit as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except DegenerateGeometryError as exc:
        print(f"degenerate geometry: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (ContractError, UnsupportedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ConstructionFailure, PlacementError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
