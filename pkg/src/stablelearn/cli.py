"""Command line interface.

Exit status is 0 on success, 1 for usage errors and 2 for numerical
failures; errors are reported on stderr as JSON ``{"code", "message"}``.
"""

import argparse
import json
import sys

import numpy as np

from . import harness
from .densela import read_matrix, spectral_radius
from .errors import NumericalError, StableLearnError
from .stabproj import DEFAULT_DELTA, DEFAULT_RADIUS_CAP, reverse_i_projection, serialize_rate
from .sysid import LinearSystem, format_trajectory, least_squares, read_trajectory, simulate

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2


class _UsageExit(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageExit(message)


def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--delta", type=float, default=None, help=f"LQR weight parameter (default {DEFAULT_DELTA:g})")
    p.add_argument("--q-scale", type=float, default=None, help="state weight Q = q_scale * I (default 1)")
    p.add_argument("--seed", type=int, default=None, help="master seed (default 0)")
    p.add_argument("--out", default=None, help="output path (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), default=None)
    p.add_argument("--radius-cap", type=float, default=None,
                   help=f"clipping radius of the baseline (default {DEFAULT_RADIUS_CAP})")
    p.add_argument("--noise-cov", default=None, help="matrix file with S_w (default identity)")
    return p


def build_parser():
    common = _common()
    parser = _Parser(prog="stablelearn", description="Learn stable linear dynamics from a trajectory.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("project", parents=[common], help="project a matrix onto the stable set")
    p.add_argument("matrix_file")

    p = sub.add_parser("estimate", parents=[common], help="least squares and its projection")
    p.add_argument("trajectory_file")

    p = sub.add_parser("simulate", parents=[common], help="simulate a trajectory")
    p.add_argument("--matrix", required=True, help="matrix file with theta")
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--init", choices=("stationary", "zero"), default="stationary")

    p = sub.add_parser("bench", parents=[common], help="run a Monte-Carlo experiment")
    p.add_argument("experiment", choices=("spectral", "rates", "coverage"))
    p.add_argument("--config", default=None, help="key = value file of experiment settings")
    for flag, kind in (("--n", int), ("--m", int), ("--trials", int), ("--systems", int),
                       ("--T", int), ("--T-max", int), ("--T-min", int), ("--grid-points", int),
                       ("--beta", float), ("--theta", float), ("--oversampling-cap", int),
                       ("--rejection-cap", int), ("--workers", int)):
        p.add_argument(flag, type=kind, default=None)
    p.add_argument("--a-rule", choices=harness.A_RULES, default=None)
    p.add_argument("--scale-down", action="store_true", default=None,
                   help="rescale unstable random systems instead of rejecting them")
    p.add_argument("--timings", action="store_true", default=None,
                   help="include per-stage runtimes (makes output non-reproducible)")
    return parser


def _emit(text, path):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _noise_cov(args, n):
    return np.eye(n) if args.noise_cov is None else read_matrix(args.noise_cov)


def _Q(args, n):
    return (1.0 if args.q_scale is None else args.q_scale) * np.eye(n)


def _delta(args):
    return DEFAULT_DELTA if args.delta is None else args.delta


def _cmd_project(args):
    theta_prime = read_matrix(args.matrix_file)
    n = theta_prime.shape[0]
    proj = reverse_i_projection(theta_prime, _noise_cov(args, n), _Q(args, n), _delta(args))
    _emit(json.dumps(proj.to_dict(), indent=1) + "\n", args.out)


def _cmd_estimate(args):
    traj = read_trajectory(args.trajectory_file)
    est = least_squares(traj)
    proj = reverse_i_projection(est.theta_hat, _noise_cov(args, traj.n), _Q(args, traj.n), _delta(args))
    out = {
        "T": traj.T,
        "n": traj.n,
        "theta_hat": est.theta_hat.tolist(),
        "rho_ls": spectral_radius(est.theta_hat),
        "theta_star": proj.theta_star.tolist(),
        "rho_proj": proj.spectral_radius_star,
        "rate": serialize_rate(proj.rate_at_star),
        "epsilon": proj.epsilon,
        "was_already_stable": proj.was_already_stable,
    }
    _emit(json.dumps(out, indent=1) + "\n", args.out)


def _cmd_simulate(args):
    theta = read_matrix(args.matrix)
    system = LinearSystem(theta, _noise_cov(args, theta.shape[0]), init=args.init)
    traj = simulate(system, args.T, 0 if args.seed is None else args.seed)
    _emit(format_trajectory(traj), args.out)


def _bench_config(args):
    overrides = {
        "experiment": args.experiment, "n": args.n, "m": args.m, "trials": args.trials,
        "systems": args.systems, "T": args.T, "T_max": args.T_max, "T_min": args.T_min,
        "grid_points": args.grid_points, "beta": args.beta, "theta": args.theta,
        "oversampling_cap": args.oversampling_cap, "rejection_cap": args.rejection_cap,
        "workers": args.workers, "a_rule": args.a_rule, "scale_down": args.scale_down,
        "timings": args.timings, "delta": args.delta, "q_scale": args.q_scale,
        "master_seed": args.seed, "radius_cap": args.radius_cap, "format": args.format,
        "output": args.out,
    }
    overrides = {k: v for k, v in overrides.items() if v is not None}
    if args.config:
        return harness.ExperimentConfig.from_file(args.config, **overrides)
    return harness.ExperimentConfig(**overrides)


def _cmd_bench(args):
    if args.noise_cov is not None:
        raise ValueError("bench experiments use S_w = I; --noise-cov is not supported here")
    config = _bench_config(args)
    if config.experiment == "coverage":
        rows, kind = [harness.run_coverage(config)], harness.CoverageSummary
    else:
        rows, kind = harness.run_experiment(config), harness.ExperimentRecord
    _emit(harness.render(rows, config.format, config.timings, kind=kind), config.output)


COMMANDS = {"project": _cmd_project, "estimate": _cmd_estimate,
            "simulate": _cmd_simulate, "bench": _cmd_bench}


def _fail(status, code, message):
    sys.stderr.write(json.dumps({"code": code, "message": message}) + "\n")
    return status


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        COMMANDS[args.command](args)
    except _UsageExit as exc:
        return _fail(EXIT_USAGE, "usage", str(exc))
    except NumericalError as exc:
        return _fail(EXIT_NUMERICAL, exc.code, str(exc))
    except StableLearnError as exc:
        return _fail(EXIT_USAGE, exc.code, str(exc))
    except (ValueError, OSError) as exc:
        return _fail(EXIT_USAGE, "usage", str(exc))
    return EXIT_OK


cli_main = main


if __name__ == "__main__":
    sys.exit(main())
