"""Acceptance suite: one PASS/FAIL line per criterion, at the required tolerances.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines inline; they
are also repeated in the terminal summary.
"""

import csv
import json
import math
import time

import numpy as np
import pytest
from conftest import ACCEPTANCE_LINES
from oracles import NORMALIZED_MATRIX

from applearm.cli import main
from applearm.control import ControllerGains
from applearm.kinematics import (
    DEFAULT_LIMITS,
    CartesianPoint,
    JointState,
    forward_kinematics,
    inverse_kinematics,
)
from applearm.perception import back_project, locate_target, synthesize_detection
from applearm.plant import PlantModel
from applearm.simulation import Scene, compare_controllers, prismatic_step_response, simulate_tracking
from applearm.trajectory import eval_quintic, plan_quintic


def record(num, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num}: {title} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def batch_runs(tmp_path_factory):
    """Two identical `batch --seed 42` invocations with default settings."""
    root = tmp_path_factory.mktemp("batch")
    runs = []
    for name in ("a", "b"):
        out = root / name
        start = time.perf_counter()
        code = main(["batch", "--seed", "42", "--out-dir", str(out)])
        runs.append((out, code, time.perf_counter() - start))
    return runs


def test_criterion_1_fk_ik_roundtrip():
    rng = np.random.default_rng(1)
    lo, hi = zip(DEFAULT_LIMITS.phi, DEFAULT_LIMITS.theta, DEFAULT_LIMITS.d_prismatic)
    samples = rng.uniform(lo, hi, size=(100_000, 3))
    start = time.perf_counter()
    worst = 0.0
    for phi, theta, d in samples:
        q = inverse_kinematics(forward_kinematics(JointState(phi, theta, d)))
        worst = max(worst, abs(q.phi - phi), abs(q.theta - theta), abs(q.d_prismatic - d))
    elapsed = time.perf_counter() - start
    record(1, "FK/IK roundtrip", worst < 1e-9 and elapsed < 5.0, f"max error {worst:.2e}, {elapsed:.2f} s")


def test_criterion_2_quintic_constraints():
    rng = np.random.default_rng(2)
    n = 10_000
    p0s, pfs, tfs = rng.uniform(-1, 1, n), rng.uniform(-1, 1, n), rng.uniform(0.5, 10, n)
    # normalized-time 6x6 systems, one per plan, then unscaled
    rhs = np.zeros((n, 6))
    rhs[:, 0], rhs[:, 3] = p0s, pfs
    scaled = np.linalg.solve(NORMALIZED_MATRIX, rhs.T).T
    oracle = scaled / tfs[:, None] ** np.arange(6)
    bc_err = coef_err = 0.0
    for i in range(n):
        axis = plan_quintic(p0s[i], pfs[i], tfs[i])
        coef_err = max(coef_err, float(np.max(np.abs(np.array(axis.coefficients) - oracle[i]))))
        s0, s1 = eval_quintic(axis, 0.0), eval_quintic(axis, tfs[i])
        bc_err = max(
            bc_err,
            abs(s0.position - p0s[i]), abs(s1.position - pfs[i]),
            abs(s0.velocity), abs(s0.acceleration), abs(s1.velocity), abs(s1.acceleration),
        )  # fmt: skip
    ok = bc_err < 1e-9 and coef_err < 1e-12
    record(2, "quintic constraints", ok, f"boundary {bc_err:.2e}, coefficients vs oracle {coef_err:.2e}")


def test_criterion_3_exponential_tracking():
    gains = ControllerGains(k1=5.0, k2=5.0)
    rng = np.random.default_rng(3)
    home = forward_kinematics(JointState(0.0, 0.0, 0.0))
    targets = Scene().targets(100, seed=3)
    start = time.perf_counter()
    worst_dev = worst_dv = 0.0
    for goal in targets:
        dy, dz = rng.uniform(0.005, 0.02, 2) * rng.choice([-1.0, 1.0], 2)
        ref0 = CartesianPoint(home.x, home.y + dy, home.z + dz)
        _, log = simulate_tracking(
            JointState(0.0, 0.0, 0.0), goal, duration=0.6, reference_start=ref0, gains=gains,
            plant=PlantModel.ideal(),
        )  # fmt: skip
        t = log.column("t")
        for e, k in ((log.column("e_y"), gains.k1), (log.column("e_z"), gains.k2)):
            dev = np.max(np.abs(e - e[0] * np.exp(-k * t))) / abs(e[0])
            worst_dev = max(worst_dev, float(dev))
        worst_dv = max(worst_dv, float(np.max(np.diff(log.column("V")))))
    elapsed = time.perf_counter() - start
    ok = worst_dev < 1e-3 and worst_dv <= 1e-9 and elapsed < 30.0
    record(3, "exponential tracking", ok, f"rel deviation {worst_dev:.2e}, max dV {worst_dv:.2e}, {elapsed:.1f} s")


def test_criterion_4_perturbed_batch(batch_runs):
    out, code, elapsed = batch_runs[0]
    summary = json.loads((out / "batch_summary.json").read_text())
    ok = code == 0 and summary["n"] == 60 and summary["success_rate"] == 1.0
    ok = ok and summary["mean_error_m"] < 0.01 and elapsed < 120.0
    detail = (
        f"{round(summary['success_rate'] * summary['n'])}/{summary['n']} within 2 cm, "
        f"mean {1000 * summary['mean_error_m']:.2f} mm, {elapsed:.1f} s"
    )
    record(4, "perturbed 60-trial batch", ok, detail)


def test_criterion_5_controller_ordering():
    seeds = range(20)
    held = 0
    for seed in seeds:
        rows = compare_controllers(repetitions=1, seed=seed)
        assert {r.limits for r in rows if r.case == "case2"} == {"widened_28deg"}
        mean = {}
        for ctl in ("proposed", "position", "open_loop"):
            mean[ctl] = np.mean([r.mean_error_mm for r in rows if r.controller == ctl])
        held += mean["proposed"] < mean["position"] < mean["open_loop"]
    frac = held / len(seeds)
    record(5, "proposed < position < open-loop", frac >= 0.9, f"{held}/{len(seeds)} seeds, case2 widened to 28 deg")


def test_criterion_6_prismatic_steps():
    times = []
    for delta in (0.1, 0.2, 0.3):
        t, d = prismatic_step_response(0.0, delta, duration=1.0)
        outside = np.flatnonzero(np.abs(d - delta) >= 2e-3)
        times.append(t[outside[-1] + 1] if outside[-1] + 1 < len(t) else math.inf)
    ok = max(times) <= 1.0
    record(6, "prismatic PI steps", ok, "settling " + ", ".join(f"{x:.3f} s" for x in times))


def test_criterion_7_perception_inverse():
    targets = Scene().targets(1000, seed=7)
    worst = max(locate_target(synthesize_detection(p)).distance_to(p) for p in targets)
    rng = np.random.default_rng(7)
    depth_err = []
    for p in targets:
        det = synthesize_detection(p, depth_sigma=0.005, rng=rng)
        true_depth = back_project(synthesize_detection(p)).z
        depth_err.append(back_project(det).z - true_depth)
    predicted = 0.005 / math.sqrt(64)
    ratio = float(np.std(depth_err)) / predicted
    ok = worst < 1e-9 and abs(ratio - 1.0) <= 0.2
    record(7, "perception inverse", ok, f"noise-free max {worst:.2e} m, noisy std / prediction = {ratio:.3f}")


def test_criterion_8_determinism(batch_runs):
    (a, code_a, _), (b, code_b, _) = batch_runs
    names = ("batch_summary.json", "batch_trials.csv")
    same = all((a / n).read_bytes() == (b / n).read_bytes() for n in names)
    record(8, "batch --seed 42 determinism", same and code_a == code_b == 0, "byte-identical " + ", ".join(names))


def test_criterion_9_timing_budget(batch_runs):
    out = batch_runs[0][0]
    with open(out / "batch_trials.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    loc = [float(r["localize_s"]) for r in rows]
    app = [float(r["approach_s"]) for r in rows]
    det = [float(r["detach_s"]) for r in rows]
    ok = (
        all(abs(x - 0.3) < 1e-9 for x in loc)
        and all(2.0 - 1e-9 <= x <= 2.5 + 1e-9 for x in app)
        and all(abs(x - 1.0) < 1e-9 for x in det)
    )
    detail = f"localize {np.mean(loc):.3f} s, approach {min(app):.3f}-{max(app):.3f} s, detach {np.mean(det):.3f} s"
    record(9, "timing budget", ok, detail)
