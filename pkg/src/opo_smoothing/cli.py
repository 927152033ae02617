"""Command-line front end.

Subcommands: ``point``, ``sweep-eta``, ``sweep-angles``,
``true-squeeze``, ``simulate`` (emit a measurement-record file) and
``estimate`` (consume a record file, emit a trajectory file).  Angles
are taken in degrees here and converted to radians at the boundary.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys

import numpy as np

from .estimation import estimate_record, solve_riccati
from .metrics import MetricsReport
from .model import SystemParams, build_model, load_params, paper_defaults, transmittance_for_eta_a
from .recordio import load_record, save_record, save_trajectories
from .simulate import simulate_true, unconditional_cov
from .sweep import SweepConfig, run_point, run_sweep, true_state_squeezing_sweep

__all__ = ["main", "build_parser"]


def _add_param_args(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("system parameters")
    group.add_argument("--preset", choices=["paper"], default=None,
                       help="start from the published operating point")
    group.add_argument("--params", metavar="FILE", default=None,
                       help="flat key=value parameter file")
    group.add_argument("--gamma", type=float, help="cavity half-rate [rad/s]")
    group.add_argument("--xi", type=float, help="normalized pump amplitude")
    group.add_argument("--transmittance", type=float, help="beam-splitter T")
    group.add_argument("--eta-a", type=float, dest="eta_a",
                       help="target Alice efficiency (sets T through the preset losses)")
    group.add_argument("--theta-a", type=float, dest="theta_a",
                       help="Alice homodyne angle [deg]")
    group.add_argument("--theta-b", type=float, dest="theta_b",
                       help="Bob homodyne angle [deg]")
    group.add_argument("--hbar", type=float, help="quantum unit (default 1)")


def _params_from_args(args: argparse.Namespace) -> SystemParams:
    if args.params is not None:
        base = load_params(args.params)
    elif args.preset == "paper" or (
        args.preset is None and args.gamma is None and args.xi is None
    ):
        base = paper_defaults()
    else:
        if args.gamma is None or args.xi is None:
            raise SystemExit("give --preset/--params or both --gamma and --xi")
        base = SystemParams(gamma=args.gamma, xi=args.xi)
    updates = {}
    if args.gamma is not None:
        updates["gamma"] = args.gamma
    if args.xi is not None:
        updates["xi"] = args.xi
    if args.eta_a is not None and args.transmittance is not None:
        raise SystemExit("--eta-a and --transmittance are mutually exclusive")
    if args.transmittance is not None:
        updates["transmittance"] = args.transmittance
    if args.theta_a is not None:
        updates["theta_a"] = math.radians(args.theta_a)
    if args.theta_b is not None:
        updates["theta_b"] = math.radians(args.theta_b)
    if args.hbar is not None:
        updates["hbar"] = args.hbar
    params = dataclasses.replace(base, **updates) if updates else base
    if args.eta_a is not None:
        params = params.with_transmittance(transmittance_for_eta_a(args.eta_a, params))
    return params


def _add_mc_args(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("Monte-Carlo options")
    group.add_argument("--monte-carlo", action="store_true",
                       help="add record-ensemble estimates to the theory values")
    group.add_argument("--records", type=int, default=200, help="records per cell")
    group.add_argument("--duration", type=float, default=50e-6,
                       help="record length [s]")
    group.add_argument("--dt", type=float, default=None, help="integrator step [s]")
    group.add_argument("--seed", type=int, default=0, help="base RNG seed")


def _sweep_config(args: argparse.Namespace, params: SystemParams, **axis) -> SweepConfig:
    return SweepConfig(
        params=params,
        mode="monte-carlo" if getattr(args, "monte_carlo", False) else "theory",
        records_per_point=args.records,
        duration=args.duration,
        dt=args.dt,
        seed=args.seed,
        **axis,
    )


def _print_report(report: MetricsReport) -> None:
    as_dict = dataclasses.asdict(report)
    empirical = as_dict.pop("empirical")
    stderr = as_dict.pop("mc_stderr")
    for key, value in as_dict.items():
        print(f"{key} = {value:.9g}")
    for key in sorted(empirical):
        print(f"mc.{key} = {empirical[key]:.9g} +- {stderr.get(key, float('nan')):.3g}")


def _cmd_point(args: argparse.Namespace) -> int:
    params = _params_from_args(args)
    report = run_point(_sweep_config(args, params))
    _print_report(report)
    if args.out:
        payload = dataclasses.asdict(report)
        with open(args.out, "w") as fh:
            json.dump(payload, fh, indent=2)
        print(f"wrote {args.out}", file=sys.stderr)
    return 0


def _cmd_sweep_eta(args: argparse.Namespace) -> int:
    params = _params_from_args(args)
    if args.eta_a_values:
        targets = [float(v) for v in args.eta_a_values.split(",")]
        t_values = [transmittance_for_eta_a(v, params) for v in targets]
    elif args.t_values:
        t_values = [float(v) for v in args.t_values.split(",")]
    else:
        raise SystemExit("give --eta-a-values or --t-values")
    config = _sweep_config(args, params, transmittance_values=t_values)
    result = run_sweep(config)
    paths = result.save(args.out)
    print(f"wrote {paths[0]} and {paths[1]}", file=sys.stderr)
    return 0


def _cmd_sweep_angles(args: argparse.Namespace) -> int:
    params = _params_from_args(args)
    config = _sweep_config(args, params, theta_step_deg=args.step)
    result = run_sweep(config)
    paths = result.save(args.out)
    print(f"wrote {paths[0]} and {paths[1]}", file=sys.stderr)
    return 0


def _cmd_true_squeeze(args: argparse.Namespace) -> int:
    params = _params_from_args(args)
    config = _sweep_config(args, params, theta_step_deg=args.step)
    result = true_state_squeezing_sweep(config)
    paths = result.save(args.out)
    print(f"wrote {paths[0]} and {paths[1]}", file=sys.stderr)
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    params = _params_from_args(args)
    model = build_model(params)
    sol = solve_riccati(model)
    _, record = simulate_true(
        model, sol.v_true, duration=args.duration, dt=args.dt, seed=args.seed
    )
    save_record(record, args.out)
    print(f"wrote {args.out} ({len(record)} samples, dt={record.dt:.3e} s)",
          file=sys.stderr)
    return 0


def _cmd_estimate(args: argparse.Namespace) -> int:
    params = _params_from_args(args)
    model = build_model(params)
    record = load_record(args.record)
    sol = solve_riccati(model)
    out = estimate_record(model, record, sol)
    save_trajectories(
        args.out,
        out.true_ref,
        out.filtered,
        out.smoothed,
        v_unc=unconditional_cov(model),
        hbar=params.hbar,
    )
    print(f"wrote {args.out}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="opo-smoothing",
        description="Filtering and smoothing for a homodyne-monitored OPO.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_point = sub.add_parser("point", help="metrics for one parameter point")
    _add_param_args(p_point)
    _add_mc_args(p_point)
    p_point.add_argument("--out", default=None, help="optional JSON output path")
    p_point.set_defaults(func=_cmd_point)

    p_eta = sub.add_parser("sweep-eta", help="sweep Alice's efficiency via the beam splitter")
    _add_param_args(p_eta)
    _add_mc_args(p_eta)
    p_eta.add_argument("--eta-a-values", default=None,
                       help="comma-separated eta_A targets, e.g. 0.09,0.43,0.78")
    p_eta.add_argument("--t-values", default=None,
                       help="comma-separated transmittance values")
    p_eta.add_argument("--out", required=True, help="output basename (.csv/.json)")
    p_eta.set_defaults(func=_cmd_sweep_eta)

    p_ang = sub.add_parser("sweep-angles", help="recovery metrics over a (theta_A, theta_B) grid")
    _add_param_args(p_ang)
    _add_mc_args(p_ang)
    p_ang.add_argument("--step", type=float, default=1.0, help="grid step [deg]")
    p_ang.add_argument("--out", required=True, help="output basename (.csv/.json)")
    p_ang.set_defaults(func=_cmd_sweep_angles)

    p_true = sub.add_parser("true-squeeze", help="true-state squeezing over the angle grid")
    _add_param_args(p_true)
    _add_mc_args(p_true)
    p_true.add_argument("--step", type=float, default=1.0, help="grid step [deg]")
    p_true.add_argument("--out", required=True, help="output basename (.csv/.json)")
    p_true.set_defaults(func=_cmd_true_squeeze)

    p_sim = sub.add_parser("simulate", help="emit a synthetic measurement record")
    _add_param_args(p_sim)
    p_sim.add_argument("--duration", type=float, default=50e-6, help="record length [s]")
    p_sim.add_argument("--dt", type=float, default=None, help="integrator step [s]")
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--out", required=True, help="record CSV path")
    p_sim.set_defaults(func=_cmd_simulate)

    p_est = sub.add_parser("estimate", help="estimate trajectories from a record file")
    _add_param_args(p_est)
    p_est.add_argument("--record", required=True, help="input record CSV")
    p_est.add_argument("--out", required=True, help="trajectory CSV path")
    p_est.set_defaults(func=_cmd_estimate)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
