"""Closed-form kinematics of the pan/tilt/prismatic arm.

The base frame has x along the prismatic rail, y lateral and z vertical.
Angles are radians throughout; conversion to degrees happens only at the
CLI and report boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import LimitViolation, OutOfReach

__all__ = [
    "LinkParams",
    "JointState",
    "CartesianPoint",
    "JointLimits",
    "LimitReport",
    "forward_kinematics",
    "inverse_kinematics",
    "velocity_map",
    "check_limits",
    "sample_workspace",
    "DEFAULT_LINKS",
    "DEFAULT_LIMITS",
]


@dataclass(frozen=True)
class LinkParams:
    d1: float = 0.0635
    d2: float = 0.0889
    d3: float = 0.6985

    def __post_init__(self):
        for name in ("d1", "d2", "d3"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ValueError(f"link length {name} must be positive, got {value!r}")


@dataclass(frozen=True)
class JointState:
    phi: float
    theta: float
    d_prismatic: float

    def as_tuple(self):
        return (self.phi, self.theta, self.d_prismatic)

    def degrees(self):
        """(phi_deg, theta_deg, d_m) for display."""
        return (math.degrees(self.phi), math.degrees(self.theta), self.d_prismatic)


@dataclass(frozen=True)
class CartesianPoint:
    x: float
    y: float
    z: float

    def __post_init__(self):
        # a sum is finite only if every term is (overflow aside)
        if not math.isfinite(self.x + self.y + self.z):
            raise ValueError(f"non-finite Cartesian point ({self.x}, {self.y}, {self.z})")

    def as_array(self):
        return np.array([self.x, self.y, self.z])

    def distance_to(self, other):
        return math.sqrt((self.x - other.x) ** 2 + (self.y - other.y) ** 2 + (self.z - other.z) ** 2)


@dataclass(frozen=True)
class JointLimits:
    """Per-joint [lower, upper] bounds.

    ``tolerance`` admits values this far outside a bound so that round-off in
    IK (e.g. D = -1e-17 at home) does not produce spurious violations.
    """

    phi: tuple = (math.radians(-25.0), math.radians(25.0))
    theta: tuple = (math.radians(-25.0), math.radians(25.0))
    d_prismatic: tuple = (0.0, 0.61)
    tolerance: float = 1e-6

    def __post_init__(self):
        for name in ("phi", "theta", "d_prismatic"):
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise ValueError(f"joint limit {name}: lower {lo} must be < upper {hi}")
        if self.tolerance < 0:
            raise ValueError("limit tolerance must be non-negative")

    def widened(self, revolute_deg):
        """Symmetric revolute limits of +/- ``revolute_deg``; prismatic unchanged."""
        r = math.radians(revolute_deg)
        return JointLimits((-r, r), (-r, r), self.d_prismatic, self.tolerance)

    def shrunk(self, fraction):
        """Limits scaled about each interval's midpoint by ``fraction``."""

        def _scale(bounds):
            lo, hi = bounds
            mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo) * fraction
            return (mid - half, mid + half)

        return JointLimits(_scale(self.phi), _scale(self.theta), _scale(self.d_prismatic), self.tolerance)


@dataclass(frozen=True)
class LimitReport:
    ok: bool
    violations: tuple = field(default_factory=tuple)

    def __bool__(self):
        return self.ok


DEFAULT_LINKS = LinkParams()
DEFAULT_LIMITS = JointLimits()


def forward_kinematics(q, links=DEFAULT_LINKS):
    cphi, sphi = math.cos(q.phi), math.sin(q.phi)
    cth, sth = math.cos(q.theta), math.sin(q.theta)
    return CartesianPoint(
        links.d3 * cth * cphi + q.d_prismatic,
        links.d3 * sphi + links.d2,
        -links.d3 * sth * cphi + links.d1,
    )


def inverse_kinematics(p, links=DEFAULT_LINKS, limits=DEFAULT_LIMITS):
    """Analytic IK on the principal arcsin branch.

    Raises OutOfReach when an arcsin argument leaves [-1, 1] and
    LimitViolation when the solution falls outside ``limits``. Pass
    ``limits=None`` to skip the limit check.
    """
    s_phi = (p.y - links.d2) / links.d3
    if abs(s_phi) > 1.0:
        raise OutOfReach(f"|y - d2| = {abs(p.y - links.d2):.6g} m exceeds d3 = {links.d3} m")
    phi = math.asin(s_phi)
    reach = links.d3 * math.cos(phi)
    s_theta = (links.d1 - p.z) / reach
    if abs(s_theta) > 1.0:
        raise OutOfReach(f"|d1 - z| = {abs(links.d1 - p.z):.6g} m exceeds d3*cos(phi) = {reach:.6g} m")
    theta = math.asin(s_theta)
    d = p.x - links.d3 * math.cos(theta) * math.cos(phi)
    q = JointState(phi, theta, d)
    if limits is not None:
        report = check_limits(q, limits)
        if not report.ok:
            deg = q.degrees()
            raise LimitViolation(
                f"IK solution phi={deg[0]:.3f} deg, theta={deg[1]:.3f} deg, D={deg[2]:.4f} m "
                f"violates limits on {', '.join(report.violations)}",
                joint_state=q,
                violations=report.violations,
            )
    return q


def velocity_map(q, omega_phi, omega_theta, links=DEFAULT_LINKS):
    """(ydot, zdot) produced by revolute rates at configuration ``q``."""
    cphi, sphi = math.cos(q.phi), math.sin(q.phi)
    cth, sth = math.cos(q.theta), math.sin(q.theta)
    ydot = links.d3 * cphi * omega_phi
    zdot = -links.d3 * cth * cphi * omega_theta + links.d3 * sth * sphi * omega_phi
    return ydot, zdot


def check_limits(q, limits=DEFAULT_LIMITS):
    tol = limits.tolerance
    violations = []
    for name, value in (("phi", q.phi), ("theta", q.theta), ("d_prismatic", q.d_prismatic)):
        lo, hi = getattr(limits, name)
        if not (lo - tol <= value <= hi + tol):
            violations.append(name)
    return LimitReport(not violations, tuple(violations))


def sample_workspace(limits=DEFAULT_LIMITS, links=DEFAULT_LINKS, n=1, seed=0, margin=1e-6):
    """FK images of ``n`` joint states drawn uniformly inside ``limits``.

    ``margin`` keeps samples strictly inside each bound.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    points = []
    for _ in range(n):
        q = JointState(
            rng.uniform(limits.phi[0] + margin, limits.phi[1] - margin),
            rng.uniform(limits.theta[0] + margin, limits.theta[1] - margin),
            rng.uniform(limits.d_prismatic[0] + margin, limits.d_prismatic[1] - margin),
        )
        points.append(forward_kinematics(q, links))
    return points
