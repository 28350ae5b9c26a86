"""Rest-to-rest quintic reference trajectories for the y and z axes."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import InvalidHorizon

__all__ = [
    "QuinticAxis",
    "ReferenceSample",
    "plan_quintic",
    "eval_quintic",
    "plan_cartesian_reference",
    "reference_table",
    "write_reference_csv",
    "DEFAULT_HORIZON",
]

DEFAULT_HORIZON = 2.0


@dataclass(frozen=True)
class QuinticAxis:
    """Monomial coefficients a0..a5 on [0, t_f] with the boundary positions they join."""

    p0: float
    pf: float
    t_f: float
    coefficients: tuple


@dataclass(frozen=True)
class ReferenceSample:
    t: float
    position: float
    velocity: float
    acceleration: float


def plan_quintic(p0, pf, t_f):
    if not t_f > 0:
        raise InvalidHorizon(f"time horizon must be positive, got {t_f!r}")
    delta = pf - p0
    return QuinticAxis(
        float(p0),
        float(pf),
        float(t_f),
        (
            float(p0),
            0.0,
            0.0,
            10.0 * delta / t_f**3,
            -15.0 * delta / t_f**4,
            6.0 * delta / t_f**5,
        ),
    )


def eval_quintic(axis, t):
    """Position, velocity and acceleration at ``t``.

    Times outside [0, t_f] are clamped, so after t_f the reference holds the
    goal with zero velocity.
    """
    tc = min(max(t, 0.0), axis.t_f)
    a0, a1, a2, a3, a4, a5 = axis.coefficients
    pos = a0 + tc * (a1 + tc * (a2 + tc * (a3 + tc * (a4 + tc * a5))))
    vel = a1 + tc * (2 * a2 + tc * (3 * a3 + tc * (4 * a4 + tc * 5 * a5)))
    acc = 2 * a2 + tc * (6 * a3 + tc * (12 * a4 + tc * 20 * a5))
    return ReferenceSample(t, pos, vel, acc)


def plan_cartesian_reference(start, goal, t_f=DEFAULT_HORIZON):
    """(y_axis, z_axis) plans; x is left to the prismatic loop."""
    return plan_quintic(start.y, goal.y, t_f), plan_quintic(start.z, goal.z, t_f)


def reference_table(y_axis, z_axis, dt=0.01):
    """Rows of (t, y_r, z_r, ydot_r, zdot_r) sampled on [0, t_f]."""
    t_f = max(y_axis.t_f, z_axis.t_f)
    n = int(round(t_f / dt))
    rows = []
    for k in range(n + 1):
        t = k * dt
        ry, rz = eval_quintic(y_axis, t), eval_quintic(z_axis, t)
        rows.append((t, ry.position, rz.position, ry.velocity, rz.velocity))
    return np.array(rows)


def write_reference_csv(path, y_axis, z_axis, dt=0.01):
    table = reference_table(y_axis, z_axis, dt)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "y_r", "z_r", "ydot_r", "zdot_r"])
        for row in table:
            writer.writerow([f"{v:.10g}" for v in row])
    return path
