import math

import numpy as np
import pytest

from applearm.errors import InvalidTransform, NoValidDepth, OutOfView
from applearm.kinematics import CartesianPoint, sample_workspace
from applearm.perception import (
    DEFAULT_EXTRINSICS,
    CameraIntrinsics,
    Detection,
    RigidTransform,
    back_project,
    format_detection,
    locate_target,
    mean_depth,
    parse_detections,
    project,
    synthesize_detection,
    to_base_frame,
)

BOX = (600.0, 340.0, 680.0, 380.0)


@pytest.mark.parametrize(
    "depths, expected",
    [
        ([[0.7] * 4] * 4, 0.7),
        ([0.6, 0.8], 0.7),
        ([0.7, math.nan, 0.9], 0.8),
        ([0.0, -1.0, math.inf, 0.5], 0.5),
    ],
)
def test_mean_depth(depths, expected):
    assert mean_depth(Detection(BOX, np.array(depths))) == pytest.approx(expected)


def test_mean_depth_all_invalid():
    with pytest.raises(NoValidDepth):
        mean_depth(Detection(BOX, np.array([math.nan, 0.0])))


def test_back_project_example():
    K = CameraIntrinsics(fx=600, fy=600, cx=640, cy=360)
    p = back_project(Detection((930, 350, 950, 370), np.array([0.6])), K)
    assert (p.x, p.y, p.z) == pytest.approx((0.3, 0.0, 0.6), abs=1e-12)


def test_identity_transform_passes_through():
    p = to_base_frame(CartesianPoint(0.1, -0.2, 0.3), RigidTransform(np.eye(3), np.zeros(3)))
    assert (p.x, p.y, p.z) == (0.1, -0.2, 0.3)


def test_transform_inverse_roundtrip():
    c, s = math.cos(0.4), math.sin(0.4)
    T = RigidTransform([[c, -s, 0], [s, c, 0], [0, 0, 1]], [0.1, 0.2, -0.3])
    p = np.array([0.3, -0.7, 1.1])
    assert T.inverse().apply(T.apply(p)) == pytest.approx(p, abs=1e-15)


@pytest.mark.parametrize(
    "R",
    [
        [[1, 0, 0], [0, 1, 0], [0, 0, -1]],  # reflection
        [[1, 0.01, 0], [0, 1, 0], [0, 0, 1]],  # not orthonormal
    ],
)
def test_invalid_rotation(R):
    with pytest.raises(InvalidTransform):
        RigidTransform(R, [0, 0, 0])


def test_noise_free_pipeline_inverts_synthesis():
    worst = 0.0
    for target in sample_workspace(n=1000, seed=3):
        est = locate_target(synthesize_detection(target))
        worst = max(worst, est.distance_to(target))
    assert worst < 1e-9


def test_depth_noise_averages_over_grid():
    rng = np.random.default_rng(11)
    target = CartesianPoint(0.7, 0.05, 0.02)
    err = [locate_target(synthesize_detection(target, depth_sigma=0.005, rng=rng)).x - target.x for _ in range(4000)]
    # depth maps to base x; the mean of 64 samples has sigma / 8
    assert np.std(err) == pytest.approx(0.005 / 8, rel=0.1)
    assert abs(np.mean(err)) < 3 * 0.005 / 8 / math.sqrt(4000)


def test_out_of_view():
    with pytest.raises(OutOfView):
        project(CartesianPoint(0.0, 0.0, -0.5))
    with pytest.raises(OutOfView):
        synthesize_detection(CartesianPoint(0.7, 5.0, 0.0))
    with pytest.raises(OutOfView):
        synthesize_detection(CartesianPoint(-1.0, 0.0, 0.0), DEFAULT_EXTRINSICS)


def test_parse_and_format_roundtrip():
    text = "# u0,v0,u1,v1,depths\n600,340,680,380,0.7,,nan,0.9\n\n10,10,20,20,0.5\n"
    dets = parse_detections(text)
    assert len(dets) == 2
    assert dets[0].center == (640.0, 360.0)
    assert mean_depth(dets[0]) == pytest.approx(0.8)
    again = parse_detections(format_detection(dets[0]))[0]
    assert again.bbox == dets[0].bbox
    np.testing.assert_array_equal(again.range_matrix, dets[0].range_matrix)


@pytest.mark.parametrize("line", ["1,2,3,4", "5,5,1,1,0.7"])
def test_parse_rejects_malformed(line):
    with pytest.raises(ValueError):
        parse_detections(line)
