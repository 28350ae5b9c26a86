"""CSV/JSON artefacts and static SVG figures.

Numbers are written with a fixed format so identical runs give identical bytes.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

from .simulation import LOG_COLUMNS

__all__ = [
    "write_trial_csv",
    "trial_summary",
    "write_json",
    "write_trials_csv",
    "write_comparison_csv",
    "format_comparison_table",
    "plot_trial",
]


def _fmt(v):
    if isinstance(v, float) and not math.isfinite(v):
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return f"{v:.10g}"


def write_trial_csv(path, log):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LOG_COLUMNS)
        for row in log.rows:
            w.writerow([_fmt(float(v)) for v in row])
    return path


def _point(p):
    return None if p is None else [float(p.x), float(p.y), float(p.z)]


def trial_summary(record):
    return {
        "controller": record.controller_kind.value,
        "status": record.status,
        "reason": record.reason,
        "target_m": _point(record.target),
        "perceived_target_m": _point(record.perceived_target),
        "final_position_m": _point(record.final_position),
        "final_error_m": None if math.isnan(record.final_error) else record.final_error,
        "success": bool(record.success),
        "phase_durations_s": {k: round(v, 9) for k, v in record.phase_durations.items()},
        "cycle_time_s": round(record.cycle_time, 9),
        "transitions": [[round(t, 9), phase] for t, phase in record.transitions],
    }


def write_json(path, payload):
    path = Path(path)
    path.write_text(json.dumps(payload, indent=2, allow_nan=True) + "\n")
    return path


def write_trials_csv(path, trials):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(
            ["trial", "x", "y", "z", "status", "success", "final_error_m", "localize_s", "approach_s", "detach_s", "return_s"]
        )
        for i, tr in enumerate(trials):
            d = tr.phase_durations
            w.writerow(
                [i, _fmt(float(tr.target.x)), _fmt(float(tr.target.y)), _fmt(float(tr.target.z)), tr.status,
                 int(tr.success), _fmt(float(tr.final_error)), _fmt(d["localize"]), _fmt(d["approach"]),
                 _fmt(d["detach"]), _fmt(d["return"])]
            )  # fmt: skip
    return path


def write_comparison_csv(path, rows):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["case", "controller", "mean_error_mm", "std_mm", "repetitions", "limits"])
        for r in rows:
            w.writerow([r.case, r.controller, _fmt(r.mean_error_mm), _fmt(r.std_mm), r.repetitions, r.limits])
    return path


def format_comparison_table(rows):
    """Controllers as rows, cases as columns, mean error in mm."""
    cases = list(dict.fromkeys(r.case for r in rows))
    controllers = list(dict.fromkeys(r.controller for r in rows))
    cell = {(r.controller, r.case): r.mean_error_mm for r in rows}
    width = max(len(c) for c in controllers) + 2
    lines = ["".ljust(width) + "".join(c.rjust(10) for c in cases)]
    for ctl in controllers:
        lines.append(ctl.ljust(width) + "".join(f"{cell[(ctl, c)]:10.3f}" for c in cases))
    flags = {r.case: r.limits for r in rows if r.limits != "strict"}
    for case, flag in flags.items():
        lines.append(f"note: {case} run with limits '{flag}'")
    return "\n".join(lines)


def plot_trial(path, log, title=""):
    """y/z against their references, tracking error and V(t) as a three-panel SVG."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    a = log.array()
    col = {name: a[:, i] for i, name in enumerate(LOG_COLUMNS)}
    plt.rcParams["svg.hashsalt"] = "applearm"
    fig, axes = plt.subplots(3, 1, figsize=(7, 8), sharex=True)
    t = col["t"]
    axes[0].plot(t, col["y"], label="y")
    axes[0].plot(t, col["y_r"], "--", label="y_r")
    axes[0].plot(t, col["z"], label="z")
    axes[0].plot(t, col["z_r"], "--", label="z_r")
    axes[0].set_ylabel("position [m]")
    axes[0].legend(loc="best")
    axes[1].plot(t, 1000 * col["e_y"], label="e_y")
    axes[1].plot(t, 1000 * col["e_z"], label="e_z")
    axes[1].set_ylabel("error [mm]")
    axes[1].legend(loc="best")
    axes[2].plot(t, col["V"])
    axes[2].set_ylabel("V [m^2]")
    axes[2].set_xlabel("t [s]")
    if title:
        axes[0].set_title(title)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return Path(path)
