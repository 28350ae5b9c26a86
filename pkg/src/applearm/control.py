"""Revolute-joint velocity control laws, the prismatic PI loop and Lyapunov diagnostics.

Every controller is a pure function of explicit state; callers thread any
memory (the PI integral) in and out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import SingularityGuard
from .kinematics import DEFAULT_LINKS, JointState
from .trajectory import eval_quintic, plan_quintic

__all__ = [
    "TrackingError",
    "VelocityCommand",
    "ControllerGains",
    "LyapunovSample",
    "tracking_error",
    "velocity_controller",
    "open_loop_velocity_controller",
    "position_mode_controller",
    "pi_prismatic_controller",
    "lyapunov_sample",
]


@dataclass(frozen=True)
class TrackingError:
    e_y: float
    e_z: float


@dataclass(frozen=True)
class VelocityCommand:
    omega_phi: float
    omega_theta: float


VelocityCommand.ZERO = VelocityCommand(0.0, 0.0)


@dataclass(frozen=True)
class ControllerGains:
    k1: float = 5.0
    k2: float = 5.0
    kp_prismatic: float = 8.0
    ki_prismatic: float = 0.0
    singularity_guard: float = math.radians(80.0)

    def __post_init__(self):
        if not (self.k1 > 0 and self.k2 > 0):
            raise ValueError(f"k1 and k2 must be positive, got k1={self.k1}, k2={self.k2}")
        if self.kp_prismatic < 0 or self.ki_prismatic < 0:
            raise ValueError("prismatic PI gains must be non-negative")
        if not 0 < self.singularity_guard < math.pi / 2:
            raise ValueError("singularity guard must lie in (0, pi/2)")


@dataclass(frozen=True)
class LyapunovSample:
    V: float
    Vdot_analytic: float


def tracking_error(p, ref_y, ref_z):
    return TrackingError(p.y - ref_y.position, p.z - ref_z.position)


def _guarded_cosines(q, guard):
    cphi, cth = math.cos(q.phi), math.cos(q.theta)
    floor = math.cos(guard)
    if abs(cphi) <= floor or abs(cth) <= floor:
        raise SingularityGuard(
            f"phi={math.degrees(q.phi):.2f} deg, theta={math.degrees(q.theta):.2f} deg "
            f"within guard of +/-{90 - math.degrees(guard):.1f} deg from singularity"
        )
    return cphi, cth


def velocity_controller(q, err, ref_y, ref_z, gains, links=DEFAULT_LINKS):
    """Feedback-linearising law that makes e_y, e_z decay at rates k1, k2."""
    cphi, cth = _guarded_cosines(q, gains.singularity_guard)
    d3 = links.d3
    omega_phi = (-gains.k1 * err.e_y + ref_y.velocity) / (d3 * cphi)
    omega_theta = (
        gains.k2 * err.e_z + d3 * math.sin(q.theta) * math.sin(q.phi) * omega_phi - ref_z.velocity
    ) / (d3 * cth * cphi)
    return VelocityCommand(omega_phi, omega_theta)


def open_loop_velocity_controller(q, ref_y, ref_z, links=DEFAULT_LINKS, guard=math.radians(80.0)):
    """Feed-forward only: the proposed law with the error terms removed."""
    cphi, cth = _guarded_cosines(q, guard)
    d3 = links.d3
    omega_phi = ref_y.velocity / (d3 * cphi)
    omega_theta = (d3 * math.sin(q.theta) * math.sin(q.phi) * omega_phi - ref_z.velocity) / (d3 * cth * cphi)
    return VelocityCommand(omega_phi, omega_theta)


def position_mode_controller(q_desired, t, t_f, q0):
    """Joint-space rest-to-rest setpoint for the servo positioning benchmark.

    Pan and tilt each follow their own quintic from ``q0`` to ``q_desired``;
    the prismatic entry is passed through as the PI target.
    """
    phi_plan = plan_quintic(q0.phi, q_desired.phi, t_f)
    theta_plan = plan_quintic(q0.theta, q_desired.theta, t_f)
    return JointState(
        eval_quintic(phi_plan, t).position,
        eval_quintic(theta_plan, t).position,
        q_desired.d_prismatic,
    )


def pi_prismatic_controller(d, integral, d_desired, dt, gains, speed_limit=0.7):
    """One PI update for the pneumatic carriage.

    Returns ``(command_m_per_s, new_integral)``. The integral advances by the
    rectangle rule and is clamped so that ki*|integral| <= speed_limit.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    error = d_desired - d
    integral = integral + error * dt
    if gains.ki_prismatic > 0:
        bound = speed_limit / gains.ki_prismatic
        integral = min(max(integral, -bound), bound)
    command = gains.kp_prismatic * error + gains.ki_prismatic * integral
    return command, integral


def lyapunov_sample(err, gains):
    return LyapunovSample(
        0.5 * (err.e_y**2 + err.e_z**2),
        -gains.k1 * err.e_y**2 - gains.k2 * err.e_z**2,
    )
