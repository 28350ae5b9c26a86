"""Closed-loop segments, the harvest-cycle state machine and batch studies."""

from __future__ import annotations

import enum
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .control import (
    ControllerGains,
    TrackingError,
    VelocityCommand,
    lyapunov_sample,
    open_loop_velocity_controller,
    pi_prismatic_controller,
    tracking_error,
    velocity_controller,
)
from .errors import ArmError, LimitViolation, OutOfReach, OutOfView
from .kinematics import (
    DEFAULT_LIMITS,
    DEFAULT_LINKS,
    CartesianPoint,
    JointState,
    forward_kinematics,
    inverse_kinematics,
    sample_workspace,
)
from .perception import DEFAULT_EXTRINSICS, DEFAULT_INTRINSICS, locate_target, synthesize_detection
from .plant import Commands, Phase, PlantModel, SimState, step
from .trajectory import eval_quintic, plan_cartesian_reference, plan_quintic

__all__ = [
    "ControllerKind",
    "TimingBudget",
    "SimSettings",
    "TrajectoryLog",
    "TrialRecord",
    "BatchSummary",
    "ComparisonRow",
    "Scene",
    "VALIDATION_CASES",
    "LOG_COLUMNS",
    "simulate_tracking",
    "prismatic_step_response",
    "run_harvest_cycle",
    "run_batch",
    "compare_controllers",
]

LOG_COLUMNS = (
    "t", "phi", "theta", "D", "x", "y", "z", "y_r", "z_r",
    "e_y", "e_z", "V", "omega_phi", "omega_theta", "u_prismatic",
)  # fmt: skip

# Reference validation targets (base frame, metres).
VALIDATION_CASES = {
    "case1": CartesianPoint(0.6876, -0.0505, 0.011),
    "case2": CartesianPoint(0.5874, -0.1483, 0.3695),
    "case3": CartesianPoint(0.6936, 0.1938, 0.01),
}


class ControllerKind(str, enum.Enum):
    PROPOSED = "proposed"
    OPEN_LOOP = "open_loop"
    POSITION = "position"


@dataclass(frozen=True)
class TimingBudget:
    localize: float = 0.3
    approach: float = 2.0
    detach: float = 1.0

    def __post_init__(self):
        if not (self.localize > 0 and self.approach > 0 and self.detach > 0):
            raise ValueError("timing budget entries must be positive")


@dataclass(frozen=True)
class SimSettings:
    """Integration and phase-logic knobs shared by every segment."""

    dt: float = 1e-3
    settle_max: float = 0.5
    settle_tol: float = 1e-3
    success_threshold: float = 0.02
    home: JointState = JointState(0.0, 0.0, 0.0)
    log_every: int = 1
    breach_margin: float = math.radians(1.0)

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.settle_max < 0 or self.settle_tol <= 0:
            raise ValueError("invalid settling parameters")
        if self.log_every < 1:
            raise ValueError("log_every must be >= 1")


@dataclass
class TrajectoryLog:
    """Column-oriented per-step record; ``rows`` follow LOG_COLUMNS."""

    rows: list = field(default_factory=list)
    phases: list = field(default_factory=list)
    rates: list = field(default_factory=list)

    def array(self):
        return np.array(self.rows, dtype=float).reshape(-1, len(LOG_COLUMNS))

    def column(self, name):
        return self.array()[:, LOG_COLUMNS.index(name)]

    def extend(self, other):
        self.rows.extend(other.rows)
        self.phases.extend(other.phases)
        self.rates.extend(other.rates)


@dataclass
class TrialRecord:
    target: CartesianPoint
    controller_kind: ControllerKind
    final_error: float
    success: bool
    phase_durations: dict
    log: TrajectoryLog
    status: str = "done"
    reason: str = ""
    perceived_target: CartesianPoint = None
    transitions: list = field(default_factory=list)
    final_position: CartesianPoint = None

    @property
    def cycle_time(self):
        return sum(self.phase_durations.values())


@dataclass(frozen=True)
class BatchSummary:
    n: int
    success_rate: float
    mean_error_m: float
    max_error_m: float
    threshold_m: float
    seed: int
    controller: str
    phase_means_s: dict

    def to_dict(self):
        return {
            "n": self.n,
            "success_rate": self.success_rate,
            "mean_error_m": self.mean_error_m,
            "max_error_m": self.max_error_m,
            "threshold_m": self.threshold_m,
            "seed": self.seed,
            "controller": self.controller,
            "phase_means_s": dict(self.phase_means_s),
        }


@dataclass(frozen=True)
class ComparisonRow:
    case: str
    controller: str
    mean_error_mm: float
    std_mm: float
    repetitions: int
    limits: str
    errors_mm: tuple = ()


@dataclass(frozen=True)
class Scene:
    """Random-target generator: uniform joint samples inside a shrunken workspace."""

    fraction: float = 0.9

    def targets(self, n, seed, limits=DEFAULT_LIMITS, links=DEFAULT_LINKS):
        return sample_workspace(limits.shrunk(self.fraction), links, n, seed)


class _Segment:
    """One controlled motion toward a goal, run for a fixed horizon plus settling."""

    def __init__(self, kind, start_q, goal_point, goal_q, t_f, gains, plant, links):
        self.kind = ControllerKind(kind)
        self.gains, self.plant, self.links = gains, plant, links
        self.goal_point = goal_point
        self.d_desired = goal_q.d_prismatic
        start_p = forward_kinematics(start_q, links)
        self.y_axis, self.z_axis = plan_cartesian_reference(start_p, goal_point, t_f)
        self.phi_axis = plan_quintic(start_q.phi, goal_q.phi, t_f)
        self.theta_axis = plan_quintic(start_q.theta, goal_q.theta, t_f)
        res = plant.encoder_resolution
        self.window = plant.servo_window_counts * res

    def references(self, t):
        return eval_quintic(self.y_axis, t), eval_quintic(self.z_axis, t)

    def command(self, t, qm):
        if self.kind is ControllerKind.PROPOSED:
            ry, rz = self.references(t)
            err = tracking_error(forward_kinematics(qm, self.links), ry, rz)
            return velocity_controller(qm, err, ry, rz, self.gains, self.links)
        if self.kind is ControllerKind.OPEN_LOOP:
            ry, rz = self.references(t)
            return open_loop_velocity_controller(qm, ry, rz, self.links, self.gains.singularity_guard)
        sp_phi, sp_th = eval_quintic(self.phi_axis, t), eval_quintic(self.theta_axis, t)
        return VelocityCommand(
            sp_phi.velocity + self.plant.servo_gain * _deadzone(sp_phi.position - qm.phi, self.window),
            sp_th.velocity + self.plant.servo_gain * _deadzone(sp_th.position - qm.theta, self.window),
        )

    def measured_error(self, qm):
        return forward_kinematics(qm, self.links).distance_to(self.goal_point)


def _deadzone(x, width):
    if abs(x) <= width:
        return 0.0
    return x - math.copysign(width, x)


class _Runner:
    def __init__(self, gains, plant, links, limits, settings, rng):
        self.gains, self.plant, self.links, self.limits = gains, plant, links, limits
        self.settings = settings
        self.rng = rng
        self.log = TrajectoryLog()
        self._k = 0

    def _log(self, state, seg, t_local, cmd, u_d):
        if self._k % self.settings.log_every == 0:
            p = forward_kinematics(state.q, self.links)
            if seg is not None:
                ry, rz = seg.references(t_local)
                err = tracking_error(p, ry, rz)
                yr, zr = ry.position, rz.position
            else:
                yr, zr = p.y, p.z
                err = TrackingError(0.0, 0.0)
            V = lyapunov_sample(err, self.gains).V
            self.log.rows.append(
                (state.t, state.q.phi, state.q.theta, state.q.d_prismatic, p.x, p.y, p.z, yr, zr,
                 err.e_y, err.e_z, V, cmd.omega_phi, cmd.omega_theta, u_d)
            )  # fmt: skip
            self.log.phases.append(state.phase.value)
        self._k += 1

    def _scale(self):
        sigma = self.plant.rate_noise_sigma
        if sigma == 0.0 or self.rng is None:
            return (1.0, 1.0)
        a, b = self.rng.normal(1.0, sigma, size=2)
        return (float(a), float(b))

    def hold(self, state, duration):
        """Joints idle (zero revolute command) while the carriage PI holds its position."""
        dt = self.settings.dt
        n = int(round(duration / dt))
        d_hold = state.q.d_prismatic
        for _ in range(n):
            u_d, integral = pi_prismatic_controller(
                state.q.d_prismatic, state.pi_integral, d_hold, dt, self.gains, self.plant.pneumatic_speed_limit
            )
            state = replace(state, pi_integral=integral)
            self._log(state, None, 0.0, VelocityCommand(0.0, 0.0), u_d)
            state = self._advance(state, Commands(VelocityCommand(0.0, 0.0), u_d, self._scale()))
        return state, n * dt

    def track(self, state, seg, t_f, settle=True, extra=0.0, offset=0.0):
        """Run ``seg`` for t_f, settle, then hold the final reference for ``extra`` seconds.

        Settling lasts up to ``settle_max`` and stops once the measured error to
        the goal drops below ``settle_tol``. ``offset`` shifts the segment's
        local clock. Returns (state, main_plus_settle_time, extra_time).
        """
        dt = self.settings.dt
        n_main = int(round(t_f / dt))
        n_settle = int(round(self.settings.settle_max / dt)) if settle else 0
        n_extra = int(round(extra / dt))
        speed = self.plant.pneumatic_speed_limit

        def one(state, k):
            t_local = offset + k * dt
            u_d, integral = pi_prismatic_controller(
                state.q.d_prismatic, state.pi_integral, seg.d_desired, dt, self.gains, speed
            )
            state = replace(state, pi_integral=integral)
            self._log(state, seg, t_local, seg.command(t_local, state.q_measured), u_d)
            t_abs = state.t
            policy = lambda t, qm: seg.command(t_local + (t - t_abs), qm)  # noqa: E731
            return self._advance(state, Commands(policy, u_d, self._scale()))

        k = 0
        for _ in range(n_main):
            state = one(state, k)
            k += 1
        settled = 0
        while settled < n_settle and seg.measured_error(state.q_measured) >= self.settings.settle_tol:
            state = one(state, k)
            k += 1
            settled += 1
        main_steps = k
        for _ in range(n_extra):
            state = one(state, k)
            k += 1
        return state, main_steps * dt, n_extra * dt

    def _advance(self, state, commands):
        before = state.q
        new = step(state, commands, self.plant, self.settings.dt, self.limits, self.settings.breach_margin)
        dt = self.settings.dt
        self.log.rates.append(((new.q.phi - before.phi) / dt, (new.q.theta - before.theta) / dt))
        return new

    def final_row(self, state, seg=None, t_local=0.0):
        self._k = 0
        self._log(state, seg, t_local, VelocityCommand(0.0, 0.0), 0.0)


def simulate_tracking(
    q_initial,
    goal,
    controller=ControllerKind.PROPOSED,
    t_f=2.0,
    duration=None,
    reference_start=None,
    gains=ControllerGains(),
    plant=None,
    links=DEFAULT_LINKS,
    limits=DEFAULT_LIMITS,
    settings=SimSettings(),
    seed=0,
):
    """Track a quintic y/z reference from ``reference_start`` to ``goal`` starting at ``q_initial``.

    ``reference_start`` defaults to FK(q_initial); supplying a different point
    creates an initial tracking error. Runs for ``duration`` (default t_f)
    with no settling logic and returns (final SimState, TrajectoryLog).
    """
    plant = PlantModel.ideal() if plant is None else plant
    duration = t_f if duration is None else duration
    goal_q = inverse_kinematics(goal, links, limits)
    start_q = q_initial
    if reference_start is not None:
        start_q = inverse_kinematics(reference_start, links, None)
    seg = _Segment(controller, start_q, goal, goal_q, t_f, gains, plant, links)
    runner = _Runner(gains, plant, links, limits, settings, np.random.default_rng(seed))
    state = SimState.at_rest(q_initial, plant, phase=Phase.APPROACH)
    state, _, _ = runner.track(state, seg, duration, settle=False)
    runner.final_row(state, seg, duration)
    return state, runner.log


def prismatic_step_response(d_initial, d_desired, duration=1.0, gains=ControllerGains(), plant=None, dt=1e-3):
    """Carriage position under the PI loop for a set-point step, revolute joints idle.

    Returns (t, D) arrays of length ``duration / dt + 1``.
    """
    plant = PlantModel.ideal() if plant is None else plant
    state = SimState.at_rest(JointState(0.0, 0.0, d_initial), plant)
    n = int(round(duration / dt))
    ts, ds = [state.t], [state.q.d_prismatic]
    for _ in range(n):
        u_d, integral = pi_prismatic_controller(
            state.q.d_prismatic, state.pi_integral, d_desired, dt, gains, plant.pneumatic_speed_limit
        )
        state = step(replace(state, pi_integral=integral), Commands(prismatic=u_d), plant, dt)
        ts.append(state.t)
        ds.append(state.q.d_prismatic)
    return np.array(ts), np.array(ds)


def run_harvest_cycle(
    target_true,
    controller=ControllerKind.PROPOSED,
    plant=None,
    budget=TimingBudget(),
    gains=ControllerGains(),
    seed=0,
    links=DEFAULT_LINKS,
    limits=DEFAULT_LIMITS,
    settings=SimSettings(),
    intrinsics=DEFAULT_INTRINSICS,
    extrinsics=DEFAULT_EXTRINSICS,
    perceive=True,
):
    """Localize -> Approach -> Detach -> Return for one fruit.

    ``final_error`` is the true end-effector distance to ``target_true`` at
    the end of Approach. With ``perceive=False`` the controller receives the
    true target (no camera in the loop).
    """
    plant = PlantModel.perturbed() if plant is None else plant
    kind = ControllerKind(controller)
    rng = np.random.default_rng(seed)
    runner = _Runner(gains, plant, links, limits, settings, rng)
    state = SimState.at_rest(settings.home, plant)
    durations = {"localize": 0.0, "approach": 0.0, "detach": 0.0, "return": 0.0}
    transitions = [(state.t, Phase.IDLE.value)]
    record = TrialRecord(target_true, kind, math.nan, False, durations, runner.log, transitions=transitions)

    def enter(state, phase):
        state = state.with_phase(phase)
        transitions.append((state.t, phase.value))
        return state

    def fail(state, status, reason):
        state = enter(state, Phase.FAILED)
        record.status, record.reason = status, reason
        runner.final_row(state)
        return record

    try:
        inverse_kinematics(target_true, links, limits)
    except (OutOfReach, LimitViolation) as exc:
        return fail(state, "unreachable", str(exc))

    state = enter(state, Phase.LOCALIZE)
    if perceive:
        try:
            det = synthesize_detection(
                target_true, extrinsics, intrinsics, plant.pixel_noise_sigma, plant.depth_noise_sigma, rng
            )
            estimate = locate_target(det, intrinsics, extrinsics)
        except (OutOfView, ArmError) as exc:
            return fail(state, "perception", str(exc))
    else:
        estimate = target_true
    record.perceived_target = estimate
    state, durations["localize"] = runner.hold(state, budget.localize)
    try:
        goal_q = inverse_kinematics(estimate, links, limits)
    except (OutOfReach, LimitViolation) as exc:
        return fail(state, "unreachable", f"perceived target: {exc}")

    try:
        state = enter(state, Phase.APPROACH)
        seg = _Segment(kind, state.q_measured, estimate, goal_q, budget.approach, gains, plant, links)
        state, durations["approach"], _ = runner.track(state, seg, budget.approach)
        reached = forward_kinematics(state.q, links)
        record.final_position = reached
        record.final_error = reached.distance_to(target_true)

        # detach is a timed pose hold on the approach goal; vacuum flow is not modelled
        state = enter(state, Phase.DETACH)
        state, _, durations["detach"] = runner.track(
            state, seg, 0.0, settle=False, extra=budget.detach, offset=budget.approach
        )
        state = enter(state, Phase.RETURN)
        home_p = forward_kinematics(settings.home, links)
        back = _Segment(kind, state.q_measured, home_p, settings.home, budget.approach, gains, plant, links)
        state, durations["return"], _ = runner.track(state, back, budget.approach)
    except ArmError as exc:
        return fail(state, "simulation", f"{type(exc).__name__}: {exc}")

    state = enter(state, Phase.DONE)
    runner.final_row(state)
    record.success = record.final_error < settings.success_threshold
    return record


def _trial_seeds(seed, n):
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(n)]


def _run_trial(args):
    target, kwargs = args
    return run_harvest_cycle(target, **kwargs)


def run_batch(
    n,
    scene=Scene(),
    controller=ControllerKind.PROPOSED,
    plant=None,
    seed=0,
    budget=TimingBudget(),
    gains=ControllerGains(),
    links=DEFAULT_LINKS,
    limits=DEFAULT_LIMITS,
    settings=SimSettings(),
    intrinsics=DEFAULT_INTRINSICS,
    extrinsics=DEFAULT_EXTRINSICS,
    workers=1,
):
    """``n`` seeded harvest cycles on random in-workspace targets.

    Each trial owns an RNG stream spawned from ``seed``; with ``workers > 1``
    trials run in a process pool and are merged in trial-index order, so the
    result does not depend on ``workers``. Returns (BatchSummary, trials).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    plant = PlantModel.perturbed() if plant is None else plant
    kind = ControllerKind(controller)
    targets = scene.targets(n, seed, limits, links)
    jobs = [
        (
            target,
            dict(
                controller=kind, plant=plant, budget=budget, gains=gains, seed=trial_seed, links=links,
                limits=limits, settings=settings, intrinsics=intrinsics, extrinsics=extrinsics,
            ),
        )  # fmt: skip
        for target, trial_seed in zip(targets, _trial_seeds(seed, n))
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            trials = list(pool.map(_run_trial, jobs))
    else:
        trials = [_run_trial(job) for job in jobs]
    return summarize(trials, seed, kind, settings.success_threshold), trials


def summarize(trials, seed, controller, threshold):
    errors = np.array([t.final_error if t.status == "done" else math.inf for t in trials])
    finite = errors[np.isfinite(errors)]
    phase_means = {}
    for name in ("localize", "approach", "detach", "return"):
        phase_means[name] = float(np.mean([t.phase_durations[name] for t in trials]))
    return BatchSummary(
        n=len(trials),
        success_rate=float(np.mean([t.success for t in trials])),
        mean_error_m=float(finite.mean()) if finite.size else math.nan,
        max_error_m=float(errors.max()),
        threshold_m=threshold,
        seed=seed,
        controller=ControllerKind(controller).value,
        phase_means_s=phase_means,
    )


def _approach_error(target, kind, plant, gains, links, limits, settings, t_f, seed):
    """True final distance after one approach from home straight to ``target``."""
    goal_q = inverse_kinematics(target, links, limits)
    runner = _Runner(gains, plant, links, limits, settings, np.random.default_rng(seed))
    state = SimState.at_rest(settings.home, plant, phase=Phase.APPROACH)
    seg = _Segment(kind, state.q_measured, target, goal_q, t_f, gains, plant, links)
    state, _, _ = runner.track(state, seg, t_f)
    return forward_kinematics(state.q, links).distance_to(target)


def compare_controllers(
    cases=None,
    repetitions=5,
    plant=None,
    seed=0,
    gains=ControllerGains(),
    links=DEFAULT_LINKS,
    limits=DEFAULT_LIMITS,
    settings=SimSettings(),
    t_f=2.0,
    widen_deg=28.0,
    controllers=(ControllerKind.OPEN_LOOP, ControllerKind.POSITION, ControllerKind.PROPOSED),
):
    """Mean final approach error per case and controller, in millimetres.

    The target is handed to the controller directly, isolating control from
    perception. A case whose IK violates ``limits`` is rerun with revolute
    limits widened to +/- ``widen_deg`` and flagged in the row's ``limits``
    field; a case that is still infeasible yields NaN rows flagged
    ``unreachable``. Repetition r of a case uses the same RNG stream for every
    controller.
    """
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    plant = PlantModel.perturbed() if plant is None else plant
    cases = VALIDATION_CASES if cases is None else cases
    if not isinstance(cases, dict):
        cases = {f"case{i + 1}": c for i, c in enumerate(cases)}
    rows = []
    for ci, (name, target) in enumerate(cases.items()):
        case_limits, flag = limits, "strict"
        try:
            inverse_kinematics(target, links, limits)
        except LimitViolation:
            case_limits, flag = limits.widened(widen_deg), f"widened_{widen_deg:g}deg"
        except OutOfReach:
            case_limits, flag = None, "unreachable"
        if case_limits is not None:
            try:
                inverse_kinematics(target, links, case_limits)
            except (LimitViolation, OutOfReach):
                case_limits, flag = None, "unreachable"
        rep_seeds = [
            int(np.random.SeedSequence([seed, ci, r]).generate_state(1)[0]) for r in range(repetitions)
        ]
        for kind in controllers:
            kind = ControllerKind(kind)
            if case_limits is None:
                rows.append(ComparisonRow(name, kind.value, math.nan, math.nan, repetitions, flag))
                continue
            errs = []
            for rs in rep_seeds:
                try:
                    err = _approach_error(target, kind, plant, gains, links, case_limits, settings, t_f, rs)
                except ArmError:
                    err = math.nan
                errs.append(1000.0 * err)
            errs = np.array(errs)
            rows.append(
                ComparisonRow(
                    name, kind.value, float(np.mean(errs)), float(np.std(errs)), repetitions, flag,
                    tuple(float(e) for e in errs),
                )
            )  # fmt: skip
    return rows
