"""Serial 6R arm: forward kinematics, geometric Jacobian, and the three
arm-control implementations (iterative IK, first-order delta, direct EEF).

The joint chain is an axis/origin list: joint i contributes
Trans(origin_i) * Rot(axis_i, q_i), composed left to right after base_pose.
The EEF frame is the frame after the last joint's rotation, so the last
joint's axis always passes through the EEF point.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from .geometry import (
    Pose,
    pose_error,
    pose_to_vec6,
    rotation_log,
    vec6_to_pose,
)


@dataclass(frozen=True)
class ArmModel:
    axes: np.ndarray  # (6, 3) unit axes, in the local frame at zero config
    origins: np.ndarray  # (6, 3) link offsets, meters
    limits: np.ndarray  # (6, 2) [lo, hi], radians, within [-2pi, 2pi]
    base_pose: Pose = field(default_factory=Pose.identity)

    def __post_init__(self):
        axes = np.asarray(self.axes, dtype=float).reshape(6, 3)
        norms = np.linalg.norm(axes, axis=1, keepdims=True)
        object.__setattr__(self, "axes", axes / norms)
        object.__setattr__(self, "origins", np.asarray(self.origins, float).reshape(6, 3))
        limits = np.asarray(self.limits, dtype=float).reshape(6, 2)
        if np.any(limits[:, 0] < -2 * np.pi - 1e-9) or np.any(limits[:, 1] > 2 * np.pi + 1e-9):
            raise ValueError("joint limits must lie within [-2pi, 2pi]")
        object.__setattr__(self, "limits", limits)

    def clamp(self, q: np.ndarray) -> np.ndarray:
        return np.clip(q, self.limits[:, 0], self.limits[:, 1])

    def max_reach(self) -> float:
        """Upper bound on EEF distance from the base frame origin."""
        return float(np.sum(np.linalg.norm(self.origins, axis=1)))

    def to_dict(self) -> dict:
        return {
            "joints": [
                {"axis": self.axes[i].tolist(), "origin": self.origins[i].tolist()}
                for i in range(6)
            ],
            "limits": self.limits.tolist(),
            "base": pose_to_vec6(self.base_pose).tolist(),
        }

    @staticmethod
    def from_dict(d: dict) -> "ArmModel":
        joints = d["joints"]
        return ArmModel(
            axes=np.array([j["axis"] for j in joints]),
            origins=np.array([j["origin"] for j in joints]),
            limits=np.array(d["limits"]),
            base_pose=vec6_to_pose(np.array(d["base"])),
        )

    @staticmethod
    def load(path) -> "ArmModel":
        return ArmModel.from_dict(json.loads(Path(path).read_text()))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))


def default_arm(base_pose: Pose | None = None) -> ArmModel:
    """The canonical 6R test fixture: a UR5-like chain with a vertical first
    axis and an all-zeros home pose stretched out along +x at z=0.2.

    Link numbers are fixture values, not a claim about any real arm.
    Home pose: translation (1.0, 0, 0.2), identity rotation.
    """
    axes = np.array(
        [
            [0.0, 0.0, 1.0],  # base rotation
            [0.0, 1.0, 0.0],  # shoulder
            [0.0, 1.0, 0.0],  # elbow
            [0.0, 1.0, 0.0],  # wrist pitch
            [0.0, 0.0, 1.0],  # wrist yaw
            [1.0, 0.0, 0.0],  # wrist roll (through the EEF point)
        ]
    )
    origins = np.array(
        [
            [0.0, 0.0, 0.2],
            [0.0, 0.0, 0.0],
            [0.4, 0.0, 0.0],
            [0.4, 0.0, 0.0],
            [0.1, 0.0, 0.0],
            [0.1, 0.0, 0.0],
        ]
    )
    limits = np.tile([[-2 * np.pi, 2 * np.pi]], (6, 1))
    return ArmModel(axes, origins, limits, base_pose or Pose.identity())


def _rotate_vec(qw, qx, qy, qz, vx, vy, vz):
    """Rotate (vx,vy,vz) by the unit quaternion, scalar math (hot path)."""
    return (
        (1 - 2 * (qy * qy + qz * qz)) * vx
        + 2 * (qx * qy - qw * qz) * vy
        + 2 * (qx * qz + qw * qy) * vz,
        2 * (qx * qy + qw * qz) * vx
        + (1 - 2 * (qx * qx + qz * qz)) * vy
        + 2 * (qy * qz - qw * qx) * vz,
        2 * (qx * qz - qw * qy) * vx
        + 2 * (qy * qz + qw * qx) * vy
        + (1 - 2 * (qx * qx + qy * qy)) * vz,
    )


def _frames_raw(model: ArmModel, q) -> tuple[list, list]:
    """Scalar-float kinematic chain: translations and quaternions of the
    frame after each joint's rotation, base frame included at index 0.
    Shared by forward kinematics, the Jacobian, and the IK inner loop."""
    bp = model.base_pose
    px, py, pz = (float(v) for v in bp.translation)
    qw, qx, qy, qz = (float(v) for v in bp.rotation)
    axes = model.axes
    origins = model.origins
    ts = [(px, py, pz)]
    qs = [(qw, qx, qy, qz)]
    for i in range(6):
        ox, oy, oz = origins[i]
        dx, dy, dz = _rotate_vec(qw, qx, qy, qz, ox, oy, oz)
        px, py, pz = px + dx, py + dy, pz + dz
        half = 0.5 * float(q[i])
        s = math.sin(half)
        c = math.cos(half)
        ax, ay, az = axes[i]
        rw, rx, ry, rz = c, ax * s, ay * s, az * s
        qw, qx, qy, qz = (
            qw * rw - qx * rx - qy * ry - qz * rz,
            qw * rx + qx * rw + qy * rz - qz * ry,
            qw * ry - qx * rz + qy * rw + qz * rx,
            qw * rz + qx * ry - qy * rx + qz * rw,
        )
        ts.append((px, py, pz))
        qs.append((qw, qx, qy, qz))
    return ts, qs


def _joint_frames(model: ArmModel, q: np.ndarray) -> list[Pose]:
    """Frames after each joint's rotation, base frame included at index 0."""
    ts, qs = _frames_raw(model, q)
    return [Pose(np.array(t), np.array(r)) for t, r in zip(ts, qs)]


def forward_kinematics(model: ArmModel, q: np.ndarray) -> Pose:
    q = np.asarray(q, dtype=float).reshape(6)
    ts, qs = _frames_raw(model, q)
    return Pose(np.array(ts[-1]), np.array(qs[-1]))


def _jacobian_raw(model: ArmModel, ts: list, qs: list) -> np.ndarray:
    ex, ey, ez = ts[-1]
    J = np.empty((6, 6))
    axes = model.axes
    for i in range(6):
        # joint i's axis in the base frame: rotated by the frame *including*
        # joint i's own rotation (rotation about its own axis is a no-op)
        qw, qx, qy, qz = qs[i + 1]
        px, py, pz = ts[i + 1]
        ax, ay, az = axes[i]
        zx, zy, zz = _rotate_vec(qw, qx, qy, qz, ax, ay, az)
        rx, ry, rz = ex - px, ey - py, ez - pz
        J[0, i] = zy * rz - zz * ry
        J[1, i] = zz * rx - zx * rz
        J[2, i] = zx * ry - zy * rx
        J[3, i] = zx
        J[4, i] = zy
        J[5, i] = zz
    return J


def jacobian(model: ArmModel, q: np.ndarray) -> np.ndarray:
    """Geometric Jacobian (6x6): rows 0..2 linear, 3..5 angular, base frame."""
    q = np.asarray(q, dtype=float).reshape(6)
    ts, qs = _frames_raw(model, q)
    return _jacobian_raw(model, ts, qs)


class IkStatus(Enum):
    CONVERGED = "converged"
    FAILED = "failed"


@dataclass(frozen=True)
class IkConfig:
    damping: float = 0.05
    max_iters: int = 100
    pos_tol: float = 1e-4
    rot_tol: float = 1e-3
    restarts: int = 20  # deterministic seeded restarts on failure
    restart_seed: int = 0
    max_step: float = 0.5  # per-iteration inf-norm cap on dq, radians


@dataclass(frozen=True)
class IkResult:
    status: IkStatus
    q: np.ndarray
    pos_residual: float
    rot_residual: float

    @property
    def converged(self) -> bool:
        return self.status is IkStatus.CONVERGED


def _pose_error_raw(tt, tq, ts, qs) -> np.ndarray:
    """6-d error [dp; rotation log] against the chain's last raw frame."""
    ex, ey, ez = ts[-1]
    qw, qx, qy, qz = qs[-1]
    tw, tx, ty, tz = tq
    # target_q * conj(eef_q)
    dq = np.array(
        [
            tw * qw + tx * qx + ty * qy + tz * qz,
            -tw * qx + tx * qw - ty * qz + tz * qy,
            -tw * qy + tx * qz + ty * qw - tz * qx,
            -tw * qz - tx * qy + ty * qx + tz * qw,
        ]
    )
    err = np.empty(6)
    err[0] = tt[0] - ex
    err[1] = tt[1] - ey
    err[2] = tt[2] - ez
    err[3:] = rotation_log(dq)
    return err


_EYE6 = np.eye(6)


def _dls_iterate(model: ArmModel, target: Pose, q0: np.ndarray, cfg: IkConfig):
    q = model.clamp(np.array(q0, dtype=float))
    tt = tuple(float(v) for v in target.translation)
    tq = tuple(float(v) for v in target.rotation)
    best = (np.inf, np.inf, q)
    for _ in range(cfg.max_iters):
        ts, qs = _frames_raw(model, q)  # shared by FK and the Jacobian
        err = _pose_error_raw(tt, tq, ts, qs)
        pe = float(np.linalg.norm(err[:3]))
        re = float(np.linalg.norm(err[3:]))
        if pe + re < best[0] + best[1]:
            best = (pe, re, q.copy())
        if pe <= cfg.pos_tol and re <= cfg.rot_tol:
            return True, q, pe, re
        J = _jacobian_raw(model, ts, qs)
        # error-scaled damping: full cfg.damping while far away, shrinking
        # with the residual once close so near-singular (but reachable)
        # targets still reach the tight tolerances
        lam = min(cfg.damping, max(1e-4, pe + re))
        dq = J.T @ np.linalg.solve(J @ J.T + lam**2 * _EYE6, err)
        step = np.max(np.abs(dq))
        if step > cfg.max_step:  # damp overshoot far from the target
            dq *= cfg.max_step / step
        q = model.clamp(q + dq)
    ts, qs = _frames_raw(model, q)
    err = _pose_error_raw(tt, tq, ts, qs)
    pe, re = float(np.linalg.norm(err[:3])), float(np.linalg.norm(err[3:]))
    if pe + re < best[0] + best[1]:
        best = (pe, re, q.copy())
    if pe <= cfg.pos_tol and re <= cfg.rot_tol:
        return True, q, pe, re
    return False, best[2], best[0], best[1]


def solve_ik(model: ArmModel, target: Pose, q_init: np.ndarray, cfg: IkConfig | None = None) -> IkResult:
    """Damped-least-squares IK with joint clamping each step.

    On failure from q_init, retries from seeded random in-limit
    configurations; Failed is returned as a value, never raised.
    """
    cfg = cfg or IkConfig()
    ok, q, pe, re = _dls_iterate(model, target, q_init, cfg)
    if not ok:
        rng = np.random.default_rng(cfg.restart_seed)
        lo = np.maximum(model.limits[:, 0], -np.pi)
        hi = np.minimum(model.limits[:, 1], np.pi)
        for _ in range(cfg.restarts):
            q0 = rng.uniform(lo, hi)
            ok, q, pe, re = _dls_iterate(model, target, q0, cfg)
            if ok:
                break
    status = IkStatus.CONVERGED if ok else IkStatus.FAILED
    return IkResult(status, q, pe, re)


def delta_joint_command(
    model: ArmModel,
    q: np.ndarray,
    current: Pose,
    target: Pose,
    damping: float = 0.05,
) -> np.ndarray:
    """First-order arm control: dq = J^+ * dx with the damped pseudoinverse,
    dx the 6-d pose error from current to target."""
    q = np.asarray(q, dtype=float).reshape(6)
    dx = pose_error(target, current)
    J = jacobian(model, q)
    return J.T @ np.linalg.solve(J @ J.T + damping**2 * np.eye(6), dx)


def direct_eef_command(target: Pose) -> Pose:
    """Pass-through for the onboard-IK control path; the simulator runs
    solve_ik internally when executing this command."""
    return target
