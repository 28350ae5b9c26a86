"""Synthetic detection and mean-depth back-projection into the arm base frame.

Camera frame convention: z along the optical axis, x to the right in the
image, y down.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidTransform, NoValidDepth, OutOfView
from .kinematics import CartesianPoint

__all__ = [
    "CameraIntrinsics",
    "Detection",
    "RigidTransform",
    "mean_depth",
    "back_project",
    "to_base_frame",
    "project",
    "synthesize_detection",
    "locate_target",
    "parse_detections",
    "format_detection",
    "DEFAULT_INTRINSICS",
    "DEFAULT_EXTRINSICS",
]


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float = 920.0
    fy: float = 920.0
    cx: float = 640.0
    cy: float = 360.0
    width: int = 1280
    height: int = 720

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")


@dataclass(frozen=True)
class Detection:
    bbox: tuple
    range_matrix: np.ndarray

    def __post_init__(self):
        u0, v0, u1, v1 = self.bbox
        if not (u0 < u1 and v0 < v1):
            raise ValueError(f"degenerate bounding box {self.bbox}")

    @property
    def center(self):
        u0, v0, u1, v1 = self.bbox
        return 0.5 * (u0 + u1), 0.5 * (v0 + v1)


class RigidTransform:
    """p_base = R @ p_cam + t."""

    def __init__(self, rotation, translation, atol=1e-9):
        R = np.asarray(rotation, dtype=float).reshape(3, 3)
        t = np.asarray(translation, dtype=float).reshape(3)
        if not np.allclose(R.T @ R, np.eye(3), rtol=0.0, atol=atol):
            raise InvalidTransform("rotation is not orthonormal")
        if abs(np.linalg.det(R) - 1.0) > atol:
            raise InvalidTransform("rotation has det != +1")
        self.rotation = R
        self.translation = t

    def inverse(self):
        return RigidTransform(self.rotation.T, -self.rotation.T @ self.translation)

    def apply(self, p):
        return self.rotation @ np.asarray(p, dtype=float) + self.translation

    def __repr__(self):
        return f"RigidTransform(rotation={self.rotation.tolist()}, translation={self.translation.tolist()})"


DEFAULT_INTRINSICS = CameraIntrinsics()
# Camera behind and slightly above the base origin, optical axis along base +x.
DEFAULT_EXTRINSICS = RigidTransform(
    [[0.0, 0.0, 1.0], [-1.0, 0.0, 0.0], [0.0, -1.0, 0.0]],
    [-0.6, 0.0, 0.1],
)


def _valid_depths(d):
    r = np.asarray(d.range_matrix, dtype=float).ravel()
    return r[np.isfinite(r) & (r > 0.0)]


def mean_depth(d):
    """Mean over valid samples; NaN, inf and non-positive entries are dropouts."""
    valid = _valid_depths(d)
    if valid.size == 0:
        raise NoValidDepth("range matrix has no valid depth samples")
    return float(valid.mean())


def back_project(d, K=DEFAULT_INTRINSICS):
    u, v = d.center
    z = mean_depth(d)
    return CartesianPoint((u - K.cx) * z / K.fx, (v - K.cy) * z / K.fy, z)


def to_base_frame(p_cam, T=DEFAULT_EXTRINSICS):
    return CartesianPoint(*T.apply([p_cam.x, p_cam.y, p_cam.z]))


def project(p_cam, K=DEFAULT_INTRINSICS):
    """Pixel (u, v) and depth of a camera-frame point."""
    if not p_cam.z > 0:
        raise OutOfView(f"point is behind the camera (z = {p_cam.z:.4f} m)")
    u = K.fx * p_cam.x / p_cam.z + K.cx
    v = K.fy * p_cam.y / p_cam.z + K.cy
    if not (0.0 <= u < K.width and 0.0 <= v < K.height):
        raise OutOfView(f"pixel ({u:.1f}, {v:.1f}) outside {K.width}x{K.height} image")
    return u, v, p_cam.z


def synthesize_detection(
    target_base,
    T=DEFAULT_EXTRINSICS,
    K=DEFAULT_INTRINSICS,
    pixel_sigma=0.0,
    depth_sigma=0.0,
    rng=None,
    fruit_radius=0.04,
    grid=(8, 8),
):
    """Detection whose bbox centre and range matrix reproduce ``target_base``.

    The bbox spans the projected fruit radius about the (noisy) projected
    centre; every range-matrix cell holds the target depth plus independent
    Gaussian noise. ``rng`` is a numpy Generator or an integer seed.
    """
    rng = np.random.default_rng(rng)
    p_cam = CartesianPoint(*T.inverse().apply([target_base.x, target_base.y, target_base.z]))
    u, v, z = project(p_cam, K)
    if pixel_sigma > 0:
        u += rng.normal(0.0, pixel_sigma)
        v += rng.normal(0.0, pixel_sigma)
    half_u = max(K.fx * fruit_radius / z, 1.0)
    half_v = max(K.fy * fruit_radius / z, 1.0)
    depths = np.full(grid, z, dtype=float)
    if depth_sigma > 0:
        depths = depths + rng.normal(0.0, depth_sigma, size=grid)
    return Detection((u - half_u, v - half_v, u + half_u, v + half_v), depths)


def locate_target(d, K=DEFAULT_INTRINSICS, T=DEFAULT_EXTRINSICS):
    """Detection -> base-frame target via mean depth and bbox-centre back-projection."""
    return to_base_frame(back_project(d, K), T)


def parse_detections(text):
    """One detection per non-blank, non-# line: ``u_min,v_min,u_max,v_max,depth...``.

    Empty depth fields and ``nan`` mark invalid pixels.
    """
    detections = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        fields = [f.strip() for f in line.split(",")]
        if len(fields) < 5:
            raise ValueError(f"line {lineno}: need bbox plus at least one depth sample")
        bbox = tuple(float(f) for f in fields[:4])
        depths = np.array([float(f) if f else math.nan for f in fields[4:]])
        detections.append(Detection(bbox, depths))
    return detections


def format_detection(d):
    depths = ",".join("nan" if not math.isfinite(x) else repr(float(x)) for x in np.ravel(d.range_matrix))
    return ",".join(repr(float(b)) for b in d.bbox) + "," + depths
