"""Motion stack and harvest-cycle simulator for a 3-DOF pan/tilt/prismatic apple-picking arm."""

from .control import (
    ControllerGains,
    TrackingError,
    VelocityCommand,
    lyapunov_sample,
    open_loop_velocity_controller,
    pi_prismatic_controller,
    position_mode_controller,
    tracking_error,
    velocity_controller,
)
from .kinematics import (
    CartesianPoint,
    JointLimits,
    JointState,
    LinkParams,
    check_limits,
    forward_kinematics,
    inverse_kinematics,
    sample_workspace,
    velocity_map,
)
from .plant import PlantModel, SimState, step
from .simulation import (
    VALIDATION_CASES,
    ControllerKind,
    TimingBudget,
    compare_controllers,
    run_batch,
    run_harvest_cycle,
    simulate_tracking,
)
from .trajectory import eval_quintic, plan_cartesian_reference, plan_quintic

__version__ = "0.1.0"
