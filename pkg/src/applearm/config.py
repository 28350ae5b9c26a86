"""YAML run configuration.

Every section is optional and falls back to the compiled-in defaults. Unknown
keys anywhere are rejected. Angles are given in degrees here and converted to
radians when the runtime objects are built.

Example::

    seed: 42
    out_dir: runs
    plots: true
    links: {d1: 0.0635, d2: 0.0889, d3: 0.6985}
    limits: {phi_deg: [-25, 25], theta_deg: [-25, 25], d_m: [0.0, 0.61], tolerance: 1.0e-6}
    gains: {k1: 5.0, k2: 5.0, kp_prismatic: 8.0, ki_prismatic: 0.0, singularity_guard_deg: 80}
    plant: {preset: perturbed, gain_bias_phi: 1.05}
    timing: {localize: 0.3, approach: 2.0, detach: 1.0}
    simulation: {dt: 0.001, settle_max: 0.5, settle_tol: 0.001, success_threshold: 0.02,
                 home_deg: [0, 0, 0.0], log_every: 1, breach_margin_deg: 1.0}
    scene: {fraction: 0.9}
    camera:
      intrinsics: {fx: 920, fy: 920, cx: 640, cy: 360, width: 1280, height: 720}
      extrinsics:
        rotation: [[0, 0, 1], [-1, 0, 0], [0, -1, 0]]
        translation: [-0.6, 0.0, 0.1]
    compare: {repetitions: 5, widen_deg: 28}
"""

from __future__ import annotations

import math
from dataclasses import fields
from pathlib import Path
from typing import List, Literal, Optional, Tuple

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .control import ControllerGains
from .errors import ConfigError, InvalidTransform
from .kinematics import JointLimits, JointState, LinkParams
from .perception import CameraIntrinsics, RigidTransform
from .plant import PlantModel
from .simulation import Scene, SimSettings, TimingBudget


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class LinksSection(_Section):
    d1: float = 0.0635
    d2: float = 0.0889
    d3: float = 0.6985


class LimitsSection(_Section):
    phi_deg: Tuple[float, float] = (-25.0, 25.0)
    theta_deg: Tuple[float, float] = (-25.0, 25.0)
    d_m: Tuple[float, float] = (0.0, 0.61)
    tolerance: float = 1e-6


class GainsSection(_Section):
    k1: float = 5.0
    k2: float = 5.0
    kp_prismatic: float = 8.0
    ki_prismatic: float = 0.0
    singularity_guard_deg: float = 80.0


class PlantSection(_Section):
    preset: Literal["ideal", "nominal", "perturbed"] = "perturbed"
    pan_rate_limit: Optional[float] = None
    tilt_rate_limit: Optional[float] = None
    gain_bias_phi: Optional[float] = None
    gain_bias_theta: Optional[float] = None
    encoder_counts_per_rev: Optional[int] = None
    pneumatic_time_constant: Optional[float] = None
    pneumatic_speed_limit: Optional[float] = None
    depth_noise_sigma: Optional[float] = None
    pixel_noise_sigma: Optional[float] = None
    rate_noise_sigma: Optional[float] = None
    servo_gain: Optional[float] = None
    servo_window_counts: Optional[float] = None


class TimingSection(_Section):
    localize: float = 0.3
    approach: float = 2.0
    detach: float = 1.0


class SimulationSection(_Section):
    dt: float = 1e-3
    settle_max: float = 0.5
    settle_tol: float = 1e-3
    success_threshold: float = 0.02
    home_deg: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    log_every: int = 1
    breach_margin_deg: float = 1.0
    workers: int = 1


class SceneSection(_Section):
    fraction: float = Field(0.9, gt=0.0, le=1.0)


class IntrinsicsSection(_Section):
    fx: float = 920.0
    fy: float = 920.0
    cx: float = 640.0
    cy: float = 360.0
    width: int = 1280
    height: int = 720


class ExtrinsicsSection(_Section):
    rotation: List[List[float]] = [[0.0, 0.0, 1.0], [-1.0, 0.0, 0.0], [0.0, -1.0, 0.0]]
    translation: Tuple[float, float, float] = (-0.6, 0.0, 0.1)


class CameraSection(_Section):
    intrinsics: IntrinsicsSection = IntrinsicsSection()
    extrinsics: ExtrinsicsSection = ExtrinsicsSection()


class CompareSection(_Section):
    repetitions: int = Field(5, ge=1)
    widen_deg: float = 28.0


class RunConfig(_Section):
    seed: int = 0
    out_dir: str = "out"
    plots: bool = False
    links: LinksSection = LinksSection()
    limits: LimitsSection = LimitsSection()
    gains: GainsSection = GainsSection()
    plant: PlantSection = PlantSection()
    timing: TimingSection = TimingSection()
    simulation: SimulationSection = SimulationSection()
    scene: SceneSection = SceneSection()
    camera: CameraSection = CameraSection()
    compare: CompareSection = CompareSection()


class Runtime:
    """Validated runtime objects built from a RunConfig."""

    def __init__(self, cfg):
        self.config = cfg
        try:
            self.links = LinkParams(**cfg.links.model_dump())
            lim = cfg.limits
            self.limits = JointLimits(
                tuple(math.radians(a) for a in lim.phi_deg),
                tuple(math.radians(a) for a in lim.theta_deg),
                tuple(lim.d_m),
                lim.tolerance,
            )
            g = cfg.gains
            self.gains = ControllerGains(
                g.k1, g.k2, g.kp_prismatic, g.ki_prismatic, math.radians(g.singularity_guard_deg)
            )
            self.plant = _build_plant(cfg.plant)
            self.budget = TimingBudget(**cfg.timing.model_dump())
            s = cfg.simulation
            home = JointState(math.radians(s.home_deg[0]), math.radians(s.home_deg[1]), s.home_deg[2])
            self.settings = SimSettings(
                dt=s.dt,
                settle_max=s.settle_max,
                settle_tol=s.settle_tol,
                success_threshold=s.success_threshold,
                home=home,
                log_every=s.log_every,
                breach_margin=math.radians(s.breach_margin_deg),
            )
            self.workers = s.workers
            self.scene = Scene(cfg.scene.fraction)
            self.intrinsics = CameraIntrinsics(**cfg.camera.intrinsics.model_dump())
            ext = cfg.camera.extrinsics
            self.extrinsics = RigidTransform(ext.rotation, ext.translation)
        except (ValueError, InvalidTransform) as exc:
            raise ConfigError(str(exc)) from exc


def _build_plant(section):
    base = {"ideal": PlantModel.ideal, "nominal": PlantModel, "perturbed": PlantModel.perturbed}[section.preset]()
    overrides = {f.name: getattr(section, f.name) for f in fields(PlantModel) if getattr(section, f.name) is not None}
    values = {f.name: getattr(base, f.name) for f in fields(PlantModel)}
    values.update(overrides)
    return PlantModel(**values)


def load_config(path=None, **overrides):
    """Parse and validate a YAML config; ``overrides`` replace top-level keys (CLI flags)."""
    data = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            data = yaml.safe_load(text) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: invalid YAML: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        cfg = RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc
    return Runtime(cfg)
