"""Teleoperation session: controller-to-EEF retargeting with clutching,
per-arm engagement via trigger edges, and the always-live hand mapping.

One TeleopSession drives one arm/hand pair; a bimanual rig is two sessions.
Called at the 10 Hz tick with the latest controller sample (latest-wins).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .geometry import Pose, pose_to_vec6
from .hand import hand_command_to_joints
from .kinematics import (
    ArmModel,
    IkConfig,
    delta_joint_command,
    forward_kinematics,
    solve_ik,
)


@dataclass(frozen=True)
class ControllerState:
    pose: Pose
    grip: float  # [0, 1]
    thumbstick: np.ndarray  # [-1, 1]^2
    trigger: bool
    timestamp: float = 0.0

    def is_valid(self) -> bool:
        stick = np.asarray(self.thumbstick, dtype=float)
        return bool(
            np.all(np.isfinite(self.pose.translation))
            and np.isfinite(self.grip)
            and 0.0 <= self.grip <= 1.0
            and stick.shape == (2,)
            and np.all(np.isfinite(stick))
            and np.all(np.abs(stick) <= 1.0 + 1e-9)
        )

    @staticmethod
    def from_dict(d: dict) -> "ControllerState":
        from .geometry import vec6_to_pose

        return ControllerState(
            pose=vec6_to_pose(np.array(d["pose"], dtype=float)),
            grip=float(d["grip"]),
            thumbstick=np.array(d["thumbstick"], dtype=float),
            trigger=bool(d["trigger"]),
            timestamp=float(d.get("timestamp", 0.0)),
        )

    def to_dict(self) -> dict:
        return {
            "pose": pose_to_vec6(self.pose).tolist(),
            "grip": float(self.grip),
            "thumbstick": np.asarray(self.thumbstick, dtype=float).tolist(),
            "trigger": bool(self.trigger),
            "timestamp": float(self.timestamp),
        }


class ControlImpl(Enum):
    IK_POSITION = "ik_position"
    FIRST_ORDER_DELTA = "first_order_delta"
    DIRECT_EEF = "direct_eef"


@dataclass
class ArmCommand:
    """Either a joint target (first two control implementations) or an EEF
    pose target for the simulator's onboard IK."""

    joints: np.ndarray | None = None
    eef_target: Pose | None = None


@dataclass
class TeleopCommand:
    arm: ArmCommand | None  # None while disengaged
    hand_joints: np.ndarray  # 6-vector degrees, always present


def calibrate(samples: list[tuple[Pose, Pose]]) -> tuple[Pose, float]:
    """Least-squares rigid transform T with eef ~= T o controller over the
    paired poses; returns (T, residual). One pair gives exact alignment."""
    if not samples:
        raise ValueError("need at least one sample pair")
    if len(samples) == 1:
        c, e = samples[0]
        return e.compose(c.inverse()), 0.0
    # rotation: project the sum of relative rotation matrices onto SO(3)
    M = np.zeros((3, 3))
    for c, e in samples:
        M += e.matrix()[:3, :3] @ c.matrix()[:3, :3].T
    U, _, Vt = np.linalg.svd(M)
    R = U @ np.diag([1.0, 1.0, np.linalg.det(U @ Vt)]) @ Vt
    ct = np.mean([c.translation for c, _ in samples], axis=0)
    et = np.mean([e.translation for _, e in samples], axis=0)
    t = et - R @ ct
    # rotation matrix -> quaternion via the homogeneous pose
    from .geometry import quat_from_axis_angle

    # extract axis-angle from R through its skew part (stable away from pi)
    angle = np.arccos(np.clip((np.trace(R) - 1.0) / 2.0, -1.0, 1.0))
    if angle < 1e-12:
        q = np.array([1.0, 0, 0, 0])
    else:
        axis = (
            np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
            / (2.0 * np.sin(angle))
        )
        q = quat_from_axis_angle(axis * angle)
    T = Pose(t, q)
    res = 0.0
    for c, e in samples:
        res += float(np.sum((e.translation - T.apply(c.translation)) ** 2))
    return T, float(np.sqrt(res / len(samples)))


@dataclass
class TeleopSession:
    model: ArmModel
    calibration: Pose = field(default_factory=Pose.identity)
    control_impl: ControlImpl = ControlImpl.IK_POSITION
    ik_config: IkConfig = field(default_factory=IkConfig)
    joint_speed_limit: float = 0.3  # rad per tick, clamp on commanded joints

    engaged: bool = False
    anchor_controller: Pose | None = None
    anchor_eef: Pose | None = None
    last_commanded_q: np.ndarray | None = None
    _last_trigger: bool = False

    def reset(self, q: np.ndarray) -> None:
        self.engaged = False
        self.anchor_controller = None
        self.anchor_eef = None
        self._last_trigger = False
        self.last_commanded_q = np.array(q, dtype=float)

    def retarget(self, controller_pose: Pose) -> Pose:
        """EEF target from relative controller motion since engagement,
        conjugated through the calibration rotation into the base frame."""
        assert self.engaged and self.anchor_controller is not None
        rel = self.anchor_controller.inverse().compose(controller_pose)
        rot_only = Pose(np.zeros(3), self.calibration.rotation)
        rel_base = rot_only.compose(rel).compose(rot_only.inverse())
        return self.anchor_eef.compose(rel_base)

    def _rate_limit(self, q: np.ndarray) -> np.ndarray:
        prev = self.last_commanded_q
        dq = np.clip(q - prev, -self.joint_speed_limit, self.joint_speed_limit)
        return prev + dq

    def step(self, controller: ControllerState, robot_q: np.ndarray) -> TeleopCommand | None:
        """One 10 Hz tick. Returns None (session unchanged) for a malformed
        sample. Hand commands are always produced; arm commands only while
        engaged."""
        if not controller.is_valid():
            return None
        if self.last_commanded_q is None:
            self.last_commanded_q = np.array(robot_q, dtype=float)

        rising = controller.trigger and not self._last_trigger
        self._last_trigger = controller.trigger
        if rising:
            self.engaged = not self.engaged
            if self.engaged:
                self.anchor_controller = controller.pose
                self.anchor_eef = forward_kinematics(self.model, self.last_commanded_q)
            else:
                self.anchor_controller = None
                self.anchor_eef = None

        hand = hand_command_to_joints(controller.grip, controller.thumbstick)
        if not self.engaged:
            return TeleopCommand(arm=None, hand_joints=hand)

        target = self.retarget(controller.pose)
        if self.control_impl is ControlImpl.DIRECT_EEF:
            return TeleopCommand(arm=ArmCommand(eef_target=target), hand_joints=hand)

        if self.control_impl is ControlImpl.IK_POSITION:
            result = solve_ik(self.model, target, self.last_commanded_q, self.ik_config)
            q_cmd = result.q if result.converged else self.last_commanded_q
        else:  # FIRST_ORDER_DELTA
            current = forward_kinematics(self.model, self.last_commanded_q)
            dq = delta_joint_command(
                self.model, self.last_commanded_q, current, target, self.ik_config.damping
            )
            q_cmd = self.model.clamp(self.last_commanded_q + dq)

        q_cmd = self._rate_limit(np.asarray(q_cmd, dtype=float))
        self.last_commanded_q = q_cmd
        return TeleopCommand(arm=ArmCommand(joints=q_cmd), hand_joints=hand)
