"""Command-line entry point.

Exit codes: 0 success, 2 usage or configuration error, 3 target or joint
values outside the workspace, 4 simulation failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import ConfigError, LimitViolation, OutOfReach
from .kinematics import CartesianPoint, JointState, check_limits, forward_kinematics, inverse_kinematics
from .reports import (
    format_comparison_table,
    plot_trial,
    trial_summary,
    write_comparison_csv,
    write_json,
    write_trial_csv,
    write_trials_csv,
)
from .simulation import ControllerKind, compare_controllers, run_batch, run_harvest_cycle

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_UNREACHABLE = 3
EXIT_SIMULATION = 4

_CONTROLLERS = [k.value for k in ControllerKind]


def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", type=Path, help="YAML run configuration")
    p.add_argument("--seed", type=int, help="override config seed")
    p.add_argument("--out-dir", type=Path, help="override config output directory")
    p.add_argument("--plots", action="store_true", default=None, help="write SVG figures")
    return p


def build_parser():
    common = _common()
    parser = argparse.ArgumentParser(prog="applearm", description="Harvesting-arm kinematics, control and simulation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fk", parents=[common], help="forward kinematics (degrees, degrees, metres)")
    p.add_argument("phi_deg", type=float)
    p.add_argument("theta_deg", type=float)
    p.add_argument("d_m", type=float)
    p.add_argument("--no-limits", action="store_true", help="skip the joint-limit check")

    p = sub.add_parser("ik", parents=[common], help="inverse kinematics (metres)")
    p.add_argument("x", type=float)
    p.add_argument("y", type=float)
    p.add_argument("z", type=float)

    p = sub.add_parser("simulate", parents=[common], help="one harvest cycle")
    p.add_argument("--target", type=float, nargs=3, required=True, metavar=("X", "Y", "Z"))
    p.add_argument("--controller", choices=_CONTROLLERS, default="proposed")
    p.add_argument("--no-perception", action="store_true", help="hand the true target to the controller")

    p = sub.add_parser("batch", parents=[common], help="N harvest cycles on random targets")
    p.add_argument("-n", type=int, default=60)
    p.add_argument("--controller", choices=_CONTROLLERS, default="proposed")

    p = sub.add_parser("compare", parents=[common], help="controller comparison on the validation cases")
    p.add_argument("--repetitions", type=int)
    return parser


def _runtime(args):
    from .config import load_config

    return load_config(args.config, seed=args.seed, out_dir=args.out_dir and str(args.out_dir), plots=args.plots)


def _out_dir(rt):
    out = Path(rt.config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_fk(args, rt):
    import math

    q = JointState(math.radians(args.phi_deg), math.radians(args.theta_deg), args.d_m)
    if not args.no_limits:
        report = check_limits(q, rt.limits)
        if not report.ok:
            print(f"LimitViolation: {', '.join(report.violations)} outside joint limits", file=sys.stderr)
            return EXIT_UNREACHABLE
    p = forward_kinematics(q, rt.links)
    print(f"{p.x:.4f} {p.y:.4f} {p.z:.4f}")
    return EXIT_OK


def cmd_ik(args, rt):
    try:
        q = inverse_kinematics(CartesianPoint(args.x, args.y, args.z), rt.links, rt.limits)
    except (OutOfReach, LimitViolation) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_UNREACHABLE
    phi, theta, d = q.degrees()
    print(f"{phi:.2f} {theta:.2f} {d:.4f}")
    return EXIT_OK


def cmd_simulate(args, rt):
    record = run_harvest_cycle(
        CartesianPoint(*args.target),
        controller=args.controller,
        plant=rt.plant,
        budget=rt.budget,
        gains=rt.gains,
        seed=rt.config.seed,
        links=rt.links,
        limits=rt.limits,
        settings=rt.settings,
        intrinsics=rt.intrinsics,
        extrinsics=rt.extrinsics,
        perceive=not args.no_perception,
    )
    out = _out_dir(rt)
    write_trial_csv(out / "trial.csv", record.log)
    summary = trial_summary(record)
    summary["seed"] = rt.config.seed
    write_json(out / "trial.json", summary)
    if rt.config.plots:
        plot_trial(out / "trial.svg", record.log, f"{record.controller_kind.value} controller")
    if record.status == "unreachable":
        print(f"unreachable: {record.reason}", file=sys.stderr)
        return EXIT_UNREACHABLE
    if record.status != "done":
        print(f"{record.status} failure: {record.reason}", file=sys.stderr)
        return EXIT_SIMULATION
    verdict = "success" if record.success else "miss"
    print(f"{verdict}: final error {1000 * record.final_error:.3f} mm, cycle {record.cycle_time:.3f} s")
    return EXIT_OK


def cmd_batch(args, rt):
    if args.n < 1:
        print("batch: -n must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    summary, trials = run_batch(
        args.n,
        scene=rt.scene,
        controller=args.controller,
        plant=rt.plant,
        seed=rt.config.seed,
        budget=rt.budget,
        gains=rt.gains,
        links=rt.links,
        limits=rt.limits,
        settings=rt.settings,
        intrinsics=rt.intrinsics,
        extrinsics=rt.extrinsics,
        workers=rt.workers,
    )
    out = _out_dir(rt)
    write_json(out / "batch_summary.json", summary.to_dict())
    write_trials_csv(out / "batch_trials.csv", trials)
    if rt.config.plots:
        _plot_batch(out / "batch_errors.svg", trials, summary.threshold_m)
    print(
        f"{args.n} trials: success {100 * summary.success_rate:.1f}%, "
        f"mean {1000 * summary.mean_error_m:.3f} mm, max {1000 * summary.max_error_m:.3f} mm"
    )
    return EXIT_OK


def _plot_batch(path, trials, threshold):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "applearm"
    fig, ax = plt.subplots(figsize=(7, 3.5))
    ax.bar(range(len(trials)), [1000 * t.final_error for t in trials])
    ax.axhline(1000 * threshold, color="r", linestyle="--", label="success threshold")
    ax.set_xlabel("trial")
    ax.set_ylabel("final error [mm]")
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def cmd_compare(args, rt):
    reps = args.repetitions or rt.config.compare.repetitions
    if reps < 1:
        print("compare: --repetitions must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    rows = compare_controllers(
        repetitions=reps,
        plant=rt.plant,
        seed=rt.config.seed,
        gains=rt.gains,
        links=rt.links,
        limits=rt.limits,
        settings=rt.settings,
        t_f=rt.budget.approach,
        widen_deg=rt.config.compare.widen_deg,
    )
    out = _out_dir(rt)
    write_comparison_csv(out / "comparison.csv", rows)
    print(format_comparison_table(rows))
    return EXIT_OK


_COMMANDS = {"fk": cmd_fk, "ik": cmd_ik, "simulate": cmd_simulate, "batch": cmd_batch, "compare": cmd_compare}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        rt = _runtime(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return _COMMANDS[args.command](args, rt)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
