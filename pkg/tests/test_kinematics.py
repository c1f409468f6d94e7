"""Forward kinematics, the geometric Jacobian, and damped-least-squares IK
on the 6R arm fixture. The Jacobian oracle is central finite differences of
FK; the IK criterion is the residual of FK at the returned joints."""

import time

import numpy as np
import pytest

from bimanu.geometry import Pose, pose_error, pose_to_vec6, quat_from_axis_angle
from bimanu.kinematics import (
    ArmModel,
    IkConfig,
    IkStatus,
    default_arm,
    forward_kinematics,
    jacobian,
    solve_ik,
)


def numeric_jacobian(model: ArmModel, q: np.ndarray, h: float = 1e-6) -> np.ndarray:
    """Central differences of the FK pose map, rotation rows via the log of
    the relative rotation."""
    J = np.zeros((6, 6))
    for i in range(6):
        qp, qm = q.copy(), q.copy()
        qp[i] += h
        qm[i] -= h
        fp, fm = forward_kinematics(model, qp), forward_kinematics(model, qm)
        J[:3, i] = (fp.translation - fm.translation) / (2 * h)
        J[3:, i] = pose_error(fp, fm)[3:] / (2 * h)
    return J


def random_reachable_target(model: ArmModel, rng: np.random.Generator) -> Pose:
    """A pose that is reachable by construction: FK of random joints."""
    q = rng.uniform(-np.pi * 0.6, np.pi * 0.6, 6)
    return forward_kinematics(model, q)


class TestForwardKinematics:
    def test_home_pose(self):
        eef = forward_kinematics(default_arm(), np.zeros(6))
        np.testing.assert_allclose(eef.translation, [1.0, 0.0, 0.2], atol=1e-12)
        np.testing.assert_allclose(eef.rotation, [1, 0, 0, 0], atol=1e-12)

    def test_base_joint_rotates_whole_arm(self):
        eef = forward_kinematics(default_arm(), np.array([np.pi / 2, 0, 0, 0, 0, 0]))
        np.testing.assert_allclose(eef.translation, [0.0, 1.0, 0.2], atol=1e-12)

    def test_base_pose_offset(self):
        base = Pose(np.array([0.0, 0.35, 0.0]))
        eef = forward_kinematics(default_arm(base), np.zeros(6))
        np.testing.assert_allclose(eef.translation, [1.0, 0.35, 0.2], atol=1e-12)

    def test_max_reach_bounds_fk(self):
        model = default_arm()
        rng = np.random.default_rng(0)
        base = model.base_pose.translation
        for _ in range(100):
            q = rng.uniform(-np.pi, np.pi, 6)
            p = forward_kinematics(model, q).translation
            assert np.linalg.norm(p - base) <= model.max_reach() + 1e-9


class TestJacobian:
    def test_matches_central_differences(self):
        model = default_arm()
        rng = np.random.default_rng(1)
        for _ in range(50):
            q = rng.uniform(-np.pi * 0.7, np.pi * 0.7, 6)
            J = jacobian(model, q)
            Jn = numeric_jacobian(model, q)
            rel = np.linalg.norm(J - Jn) / max(np.linalg.norm(Jn), 1e-12)
            assert rel < 1e-5

    def test_with_rotated_base(self):
        base = Pose(np.array([0.1, -0.2, 0.05]), quat_from_axis_angle([0, 0, 0.7]))
        model = default_arm(base)
        rng = np.random.default_rng(2)
        for _ in range(20):
            q = rng.uniform(-np.pi * 0.7, np.pi * 0.7, 6)
            J = jacobian(model, q)
            Jn = numeric_jacobian(model, q)
            assert np.linalg.norm(J - Jn) / np.linalg.norm(Jn) < 1e-5


class TestIk:
    def test_500_reachable_targets_all_converge(self):
        model = default_arm()
        rng = np.random.default_rng(3)
        cfg = IkConfig()
        t0 = time.monotonic()
        for k in range(500):
            target = random_reachable_target(model, rng)
            q0 = rng.uniform(-0.3, 0.3, 6)
            res = solve_ik(model, target, q0, cfg)
            assert res.status is IkStatus.CONVERGED, f"target {k} failed"
            eef = forward_kinematics(model, res.q)
            err = pose_error(target, eef)
            assert np.linalg.norm(err[:3]) <= cfg.pos_tol
            assert np.linalg.norm(err[3:]) <= cfg.rot_tol
        assert time.monotonic() - t0 < 5.0

    def test_unreachable_target_reports_failure(self):
        model = default_arm()
        far = Pose(np.array([5.0, 0.0, 0.0]))
        res = solve_ik(model, far, np.zeros(6))
        assert res.status is not IkStatus.CONVERGED
        assert not res.converged

    def test_joint_limits_respected(self):
        model = default_arm()
        lim = np.tile([-1.0, 1.0], (6, 1))
        limited = ArmModel(model.axes, model.origins, lim, model.base_pose)
        rng = np.random.default_rng(4)
        for _ in range(50):
            target = random_reachable_target(model, rng)
            res = solve_ik(limited, target, np.zeros(6))
            assert np.all(res.q >= lim[:, 0] - 1e-12)
            assert np.all(res.q <= lim[:, 1] + 1e-12)

    def test_deterministic(self):
        model = default_arm()
        rng = np.random.default_rng(5)
        target = random_reachable_target(model, rng)
        r1 = solve_ik(model, target, np.zeros(6))
        r2 = solve_ik(model, target, np.zeros(6))
        np.testing.assert_array_equal(r1.q, r2.q)


class TestArmModelSerialization:
    def test_json_round_trip(self, tmp_path):
        base = Pose(np.array([0.0, -0.35, 0.0]), quat_from_axis_angle([0, 0, 0.2]))
        model = default_arm(base)
        path = tmp_path / "arm.json"
        model.save(path)
        loaded = ArmModel.load(path)
        np.testing.assert_allclose(loaded.axes, model.axes, atol=1e-12)
        np.testing.assert_allclose(loaded.origins, model.origins, atol=1e-12)
        np.testing.assert_allclose(loaded.limits, model.limits, atol=1e-12)
        q = np.array([0.3, -0.2, 0.5, 0.1, -0.4, 0.2])
        np.testing.assert_allclose(
            pose_to_vec6(forward_kinematics(loaded, q)),
            pose_to_vec6(forward_kinematics(model, q)),
            atol=1e-9,
        )

    def test_schema_valid(self, schema_validators):
        schema_validators["arm_model.schema.json"].validate(default_arm().to_dict())

    def test_clamp(self):
        model = default_arm()
        q = np.full(6, 100.0)
        clamped = model.clamp(q)
        assert np.all(clamped <= model.limits[:, 1])
