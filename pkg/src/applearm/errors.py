"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class ArmError(Exception):
    """Base class for every error raised by applearm."""


class OutOfReach(ArmError):
    """The Cartesian target cannot be produced by any joint configuration."""


class LimitViolation(ArmError):
    """An inverse-kinematics solution exists but lies outside the joint limits."""

    def __init__(self, message, joint_state=None, violations=()):
        super().__init__(message)
        self.joint_state = joint_state
        self.violations = tuple(violations)


class InvalidHorizon(ArmError, ValueError):
    """Trajectory time horizon is not strictly positive."""


class SingularityGuard(ArmError):
    """A revolute angle came too close to the cos() = 0 singularity."""


class LimitBreach(ArmError):
    """Integration drove a joint past its hard limit plus breach margin."""


class NoValidDepth(ArmError):
    """A detection's range matrix contains no usable depth sample."""


class InvalidTransform(ArmError, ValueError):
    """A rotation matrix is not a proper orthonormal rotation."""


class OutOfView(ArmError):
    """A point does not project into the camera image."""


class ConfigError(ArmError, ValueError):
    """The run configuration is malformed or violates an invariant."""
