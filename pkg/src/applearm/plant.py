"""Actuator models and the fixed-step integrator.

Pan and tilt are rate-commanded servos: the realised joint rate is the
commanded rate times a gain bias, clipped to the gearbox output limit. The
prismatic carriage is a speed-saturated first-order lag driven by a
velocity command. Joint angles are observed through an encoder quantiser.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

from .control import VelocityCommand
from .errors import LimitBreach
from .kinematics import DEFAULT_LIMITS, JointState

__all__ = [
    "PlantModel",
    "Phase",
    "SimState",
    "Commands",
    "quantize",
    "quantize_joints",
    "realized_rates",
    "step",
    "PHASE_EDGES",
]

_RPM = 2.0 * math.pi / 60.0
MOTOR_MAX_RPM = 4000.0
PAN_GEAR_RATIO = 45.0
TILT_GEAR_RATIO = 80.0


@dataclass(frozen=True)
class PlantModel:
    pan_rate_limit: float = MOTOR_MAX_RPM * _RPM / PAN_GEAR_RATIO
    tilt_rate_limit: float = MOTOR_MAX_RPM * _RPM / TILT_GEAR_RATIO
    gain_bias_phi: float = 1.0
    gain_bias_theta: float = 1.0
    # 0 disables quantisation; counts are per joint (output-shaft) revolution
    encoder_counts_per_rev: int = 6400
    pneumatic_time_constant: float = 0.05
    pneumatic_speed_limit: float = 0.7
    depth_noise_sigma: float = 0.0
    pixel_noise_sigma: float = 0.0
    # per-step multiplicative jitter on realised revolute rates
    rate_noise_sigma: float = 0.0
    # servo positioning-mode internals (benchmark controller only)
    servo_gain: float = 20.0
    servo_window_counts: float = 2.0

    def __post_init__(self):
        if not (self.pan_rate_limit > 0 and self.tilt_rate_limit > 0):
            raise ValueError("rate limits must be positive")
        if not (self.gain_bias_phi > 0 and self.gain_bias_theta > 0):
            raise ValueError("gain biases must be positive")
        if not self.pneumatic_time_constant > 0:
            raise ValueError("pneumatic time constant must be positive")
        if not self.pneumatic_speed_limit > 0:
            raise ValueError("pneumatic speed limit must be positive")
        if self.encoder_counts_per_rev < 0:
            raise ValueError("encoder counts must be >= 0")
        for name in ("depth_noise_sigma", "pixel_noise_sigma", "rate_noise_sigma", "servo_window_counts"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not self.servo_gain > 0:
            raise ValueError("servo gain must be positive")

    @classmethod
    def ideal(cls):
        """Exact kinematic revolute plant: no bias, no quantisation, no noise."""
        return cls(encoder_counts_per_rev=0)

    @classmethod
    def perturbed(cls):
        """Default imperfect plant used for the harvest and comparison studies."""
        return cls(
            gain_bias_phi=1.05,
            gain_bias_theta=0.95,
            encoder_counts_per_rev=6400,
            depth_noise_sigma=0.005,
            pixel_noise_sigma=0.5,
            rate_noise_sigma=0.01,
        )

    @property
    def encoder_resolution(self):
        """Radians per count, or 0.0 when quantisation is disabled."""
        if self.encoder_counts_per_rev == 0:
            return 0.0
        return 2.0 * math.pi / self.encoder_counts_per_rev


class Phase(str, enum.Enum):
    IDLE = "Idle"
    LOCALIZE = "Localize"
    APPROACH = "Approach"
    DETACH = "Detach"
    RETURN = "Return"
    DONE = "Done"
    FAILED = "Failed"


PHASE_EDGES = {
    Phase.IDLE: {Phase.LOCALIZE, Phase.FAILED},
    Phase.LOCALIZE: {Phase.APPROACH, Phase.FAILED},
    Phase.APPROACH: {Phase.DETACH, Phase.FAILED},
    Phase.DETACH: {Phase.RETURN, Phase.FAILED},
    Phase.RETURN: {Phase.DONE, Phase.FAILED},
    Phase.DONE: set(),
    Phase.FAILED: set(),
}


@dataclass(frozen=True)
class SimState:
    t: float
    q: JointState
    q_measured: JointState
    d_rate: float = 0.0
    pi_integral: float = 0.0
    phase: Phase = Phase.IDLE

    @classmethod
    def at_rest(cls, q, plant, t=0.0, phase=Phase.IDLE):
        return cls(t, q, quantize_joints(q, plant), 0.0, 0.0, phase)

    def with_phase(self, phase):
        if phase not in PHASE_EDGES[self.phase]:
            raise ValueError(f"illegal phase transition {self.phase.value} -> {phase.value}")
        return replace(self, phase=phase)


@dataclass(frozen=True)
class Commands:
    """Revolute command (constant or a policy ``(t, q_measured) -> VelocityCommand``) plus carriage speed.

    A policy is re-evaluated at every integrator stage, which realises a
    continuous-time control law; a constant command is held over the step.
    """

    revolute: object = VelocityCommand(0.0, 0.0)
    prismatic: float = 0.0
    rate_scale: tuple = (1.0, 1.0)


def quantize(angle, resolution):
    if resolution == 0.0:
        return angle
    return resolution * math.floor(angle / resolution + 0.5)


def quantize_joints(q, plant):
    res = plant.encoder_resolution
    return JointState(quantize(q.phi, res), quantize(q.theta, res), q.d_prismatic)


def realized_rates(cmd, plant, rate_scale=(1.0, 1.0)):
    """Joint rates the servos actually produce for a commanded pair."""
    w_phi = cmd.omega_phi * plant.gain_bias_phi * rate_scale[0]
    w_th = cmd.omega_theta * plant.gain_bias_theta * rate_scale[1]
    lim_p, lim_t = plant.pan_rate_limit, plant.tilt_rate_limit
    return min(max(w_phi, -lim_p), lim_p), min(max(w_th, -lim_t), lim_t)


def step(state, commands, plant, dt, limits=DEFAULT_LIMITS, breach_margin=math.radians(1.0)):
    """Advance the plant by one fixed step with classical RK4.

    The carriage hits mechanical end stops at the prismatic limits. Raises
    LimitBreach when a revolute joint ends more than ``breach_margin``
    beyond its limit.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    policy = commands.revolute
    if not callable(policy):
        held = policy
        policy = lambda t, qm: held  # noqa: E731
    scale = commands.rate_scale
    tau = plant.pneumatic_time_constant
    u_d = min(max(commands.prismatic, -plant.pneumatic_speed_limit), plant.pneumatic_speed_limit)
    d_lo, d_hi = limits.d_prismatic

    def rhs(t, phi, theta, d, v):
        qm = quantize_joints(JointState(phi, theta, d), plant)
        w_phi, w_th = realized_rates(policy(t, qm), plant, scale)
        return w_phi, w_th, v, (u_d - v) / tau

    t0 = state.t
    y0 = (state.q.phi, state.q.theta, state.q.d_prismatic, state.d_rate)
    k1 = rhs(t0, *y0)
    y1 = tuple(a + 0.5 * dt * b for a, b in zip(y0, k1))
    k2 = rhs(t0 + 0.5 * dt, *y1)
    y2 = tuple(a + 0.5 * dt * b for a, b in zip(y0, k2))
    k3 = rhs(t0 + 0.5 * dt, *y2)
    y3 = tuple(a + dt * b for a, b in zip(y0, k3))
    k4 = rhs(t0 + dt, *y3)
    phi, theta, d, v = (
        a + dt / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4) for a, b1, b2, b3, b4 in zip(y0, k1, k2, k3, k4)
    )

    if d < d_lo:
        d, v = d_lo, max(v, 0.0)
    elif d > d_hi:
        d, v = d_hi, min(v, 0.0)

    q = JointState(phi, theta, d)
    for name, value in (("phi", phi), ("theta", theta)):
        lo, hi = getattr(limits, name)
        if value < lo - breach_margin or value > hi + breach_margin:
            raise LimitBreach(f"{name} = {math.degrees(value):.3f} deg left its limits by more than the margin")
    return SimState(t0 + dt, q, quantize_joints(q, plant), v, state.pi_integral, state.phase)
