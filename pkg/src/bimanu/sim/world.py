"""Deterministic kinematic bimanual world.

Arms track commanded joints with a rate limit, hands likewise; grasping is
attachment-based: an object becomes held when enough opposing fingertips
touch it and the grip is strong enough, and a held slippery object drops
the moment grip falls below its min_grip. No dynamics beyond straight-down
settling onto the nearest support surface.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field, replace

import numpy as np

from ..geometry import Pose, pose_to_vec6
from ..hand import HAND_JOINT_MAX, TouchModel, TouchModelConfig
from ..kinematics import ArmModel, IkConfig, default_arm, forward_kinematics, solve_ik
from ..teleop import ArmCommand

HANDS = ("left", "right")


@dataclass
class ObjectState:
    name: str
    shape: str  # "box" | "sphere"
    size: np.ndarray  # box: half-extents (3,); sphere: [radius]
    pose: Pose
    held_by: str | None = None
    slippery: bool = False
    min_grip: float = 0.0
    static: bool = False  # supports/table fixtures: never grasped, never fall
    color: tuple[int, int, int] = (200, 200, 200)
    touch_factor: float = 1.0  # scales contact force seen by the touch sensors
    grasp_rel: Pose | None = None  # palm->object pose while held
    settled_ticks: int = 0

    @property
    def radius(self) -> float:
        if self.shape == "sphere":
            return float(self.size[0])
        return float(np.max(self.size))

    @property
    def half_height(self) -> float:
        if self.shape == "sphere":
            return float(self.size[0])
        return float(self.size[2])


@dataclass(frozen=True)
class GraspGeometry:
    """Simplified fingertip aperture model.

    The fingertips close radially toward the palm grasp center: at joint
    angle 0 a fingertip sits aperture_open away, at full flexion
    aperture_closed. Contact with an object needs the grasp center within
    capture_radius of the object and the aperture inside its surface margin.
    """

    palm_offset: np.ndarray = field(default_factory=lambda: np.array([0.10, 0.0, 0.0]))
    aperture_open: float = 0.06
    aperture_closed: float = 0.0
    capture_radius: float = 0.06
    contact_margin: float = 0.005
    contact_force_gain: float = 4.0  # N at full grip for touch_factor 1

    def aperture(self, joint_deg: float, joint_max: float) -> float:
        frac = np.clip(joint_deg / joint_max, 0.0, 1.0)
        return self.aperture_open + frac * (self.aperture_closed - self.aperture_open)


@dataclass(frozen=True)
class WorldConfig:
    arm_left: ArmModel
    arm_right: ArmModel
    touch: TouchModelConfig = field(default_factory=TouchModelConfig)
    grasp: GraspGeometry = field(default_factory=GraspGeometry)
    arm_rate_limit: float = 0.5  # rad per tick, actual-joint tracking
    hand_rate_limit: float = 60.0  # deg per tick
    release_grip: float = 0.15  # any held object releases below this
    onboard_ik: IkConfig = field(default_factory=IkConfig)
    floor_z: float = 0.0

    @staticmethod
    def default() -> "WorldConfig":
        left_base = Pose(np.array([0.0, 0.35, 0.0]))
        right_base = Pose(np.array([0.0, -0.35, 0.0]))
        return WorldConfig(
            arm_left=default_arm(left_base), arm_right=default_arm(right_base)
        )


@dataclass
class SimCommands:
    arm_left: ArmCommand | None = None
    arm_right: ArmCommand | None = None
    hand_left: np.ndarray | None = None  # 6 joint targets, degrees
    hand_right: np.ndarray | None = None


class World:
    """Single-threaded deterministic world; seed + command stream fully
    determine every state and observation bitwise."""

    def __init__(self, config: WorldConfig, objects: list[ObjectState], seed: int = 0):
        self.config = config
        self.objects = [copy.deepcopy(o) for o in objects]
        self.seed = seed
        self.tick = 0
        # elbow-bent ready posture: the all-zeros configuration is the
        # fully stretched workspace boundary, where position IK is
        # ill-posed and slow; starting inside the workspace keeps teleop
        # and scripted IK well-conditioned from the first tick
        home = np.array([0.0, -0.6, 1.2, -0.6, 0.0, 0.0])
        self.arm_q = {"left": home.copy(), "right": home.copy()}
        self.arm_cmd = {"left": home.copy(), "right": home.copy()}
        self.hand_q = {h: np.zeros(6) for h in HANDS}
        self.hand_cmd = {h: np.zeros(6) for h in HANDS}
        self.rng = np.random.default_rng(seed)
        self.touch_models = {
            h: TouchModel(replace(config.touch, rng_seed=config.touch.rng_seed + i))
            for i, h in enumerate(HANDS)
        }

    # -- frames -----------------------------------------------------------

    def arm_model(self, hand: str) -> ArmModel:
        return self.config.arm_left if hand == "left" else self.config.arm_right

    def eef_pose(self, hand: str) -> Pose:
        return forward_kinematics(self.arm_model(hand), self.arm_q[hand])

    def palm_center(self, hand: str) -> np.ndarray:
        eef = self.eef_pose(hand)
        return eef.apply(self.config.grasp.palm_offset)

    def palm_pose(self, hand: str) -> Pose:
        eef = self.eef_pose(hand)
        return eef.compose(Pose(self.config.grasp.palm_offset))

    def grip_value(self, hand: str) -> float:
        return float(np.mean(self.hand_q[hand][:4]) / 110.0)

    def find_object(self, name: str) -> ObjectState:
        for o in self.objects:
            if o.name == name:
                return o
        raise KeyError(name)

    # -- contact model ----------------------------------------------------

    def fingertip_contacts(self, hand: str, obj: ObjectState) -> np.ndarray:
        """Boolean per finger [index, middle, ring, pinky, thumb]."""
        g = self.config.grasp
        contacts = np.zeros(5, dtype=bool)
        if obj.static:
            return contacts
        center = obj.pose.translation
        if np.linalg.norm(self.palm_center(hand) - center) > g.capture_radius + obj.radius:
            return contacts
        reach = obj.radius + g.contact_margin
        q = self.hand_q[hand]
        for i in range(4):
            contacts[i] = g.aperture(q[i], HAND_JOINT_MAX[i]) <= reach
        contacts[4] = g.aperture(q[4], HAND_JOINT_MAX[4]) <= reach
        return contacts

    def _opposing(self, contacts: np.ndarray) -> bool:
        # thumb opposes the four fingers; need both sides touching
        return bool(contacts[4] and np.any(contacts[:4]))

    # -- stepping ---------------------------------------------------------

    def _resolve_arm_command(self, hand: str, cmd: ArmCommand | None) -> np.ndarray:
        if cmd is None:
            return self.arm_cmd[hand]
        if cmd.joints is not None:
            return self.arm_model(hand).clamp(np.asarray(cmd.joints, dtype=float))
        # onboard-IK path for direct EEF commands; failure holds last command
        result = solve_ik(
            self.arm_model(hand), cmd.eef_target, self.arm_cmd[hand], self.config.onboard_ik
        )
        return result.q if result.converged else self.arm_cmd[hand]

    def step(self, commands: SimCommands | None = None, dt: float = 0.1) -> None:
        commands = commands or SimCommands()
        cfg = self.config

        self.arm_cmd["left"] = self._resolve_arm_command("left", commands.arm_left)
        self.arm_cmd["right"] = self._resolve_arm_command("right", commands.arm_right)
        for h, target in (("left", commands.hand_left), ("right", commands.hand_right)):
            if target is not None:
                self.hand_cmd[h] = np.clip(
                    np.asarray(target, dtype=float), 0.0, HAND_JOINT_MAX
                )

        prev_poses = {o.name: o.pose for o in self.objects}

        for h in HANDS:
            dq = np.clip(
                self.arm_cmd[h] - self.arm_q[h], -cfg.arm_rate_limit, cfg.arm_rate_limit
            )
            self.arm_q[h] = self.arm_q[h] + dq
            dh = np.clip(
                self.hand_cmd[h] - self.hand_q[h], -cfg.hand_rate_limit, cfg.hand_rate_limit
            )
            self.hand_q[h] = self.hand_q[h] + dh

        # releases first so a same-tick handover never drops the object
        for obj in self.objects:
            if obj.held_by is None:
                continue
            grip = self.grip_value(obj.held_by)
            drop = grip < cfg.release_grip or (obj.slippery and grip < obj.min_grip)
            if drop:
                obj.held_by = None
                obj.grasp_rel = None

        # acquisition: one object per hand, one holder per object; a hand
        # takes the nearest qualifying object (left checked first)
        for h in HANDS:
            if any(o.held_by == h for o in self.objects):
                continue
            grip = self.grip_value(h)
            palm = self.palm_center(h)
            candidates = []
            for obj in self.objects:
                if obj.held_by is not None or obj.static:
                    continue
                if grip < obj.min_grip or grip < cfg.release_grip:
                    continue
                if self._opposing(self.fingertip_contacts(h, obj)):
                    candidates.append(
                        (float(np.linalg.norm(obj.pose.translation - palm)), obj)
                    )
            if candidates:
                obj = min(candidates, key=lambda c: c[0])[1]
                obj.held_by = h
                obj.grasp_rel = self.palm_pose(h).inverse().compose(obj.pose)

        # held objects ride the palm; free ones settle straight down
        for obj in self.objects:
            if obj.static:
                continue
            if obj.held_by is not None:
                obj.pose = self.palm_pose(obj.held_by).compose(obj.grasp_rel)
            else:
                obj.pose = Pose(
                    np.array(
                        [
                            obj.pose.translation[0],
                            obj.pose.translation[1],
                            self._support_top(obj) + obj.half_height,
                        ]
                    ),
                    obj.pose.rotation,
                )

        for obj in self.objects:
            moved = (
                np.linalg.norm(obj.pose.translation - prev_poses[obj.name].translation)
                > 1e-6
            )
            if obj.held_by is None and not moved:
                obj.settled_ticks += 1
            else:
                obj.settled_ticks = 0

        self.tick += 1

    def _support_top(self, obj: ObjectState) -> float:
        """Top of the highest surface under the object's center (its own
        previous footprint excluded); the floor if nothing is underneath."""
        x, y, z = obj.pose.translation
        best = self.config.floor_z
        for other in self.objects:
            if other is obj or other.held_by is not None:
                continue
            ox, oy, oz = other.pose.translation
            top = oz + other.half_height
            if top > z + 1e-9:  # only surfaces at or below the object center
                continue
            if other.shape == "box":
                inside = abs(x - ox) <= other.size[0] and abs(y - oy) <= other.size[1]
            else:
                inside = np.hypot(x - ox, y - oy) <= other.size[0]
            if inside and top > best:
                best = top
        return best

    # -- touch ------------------------------------------------------------

    def contact_forces(self, hand: str) -> np.ndarray:
        """Per-sensor normal force (30,): each contacting fingertip presses
        with grip * gain * touch_factor newtons on all six of its sensors."""
        g = self.config.grasp
        forces = np.zeros(30)
        grip = self.grip_value(hand)
        for obj in self.objects:
            if obj.static:
                continue
            contacts = self.fingertip_contacts(hand, obj)
            f = grip * g.contact_force_gain * obj.touch_factor
            for i in range(5):
                if contacts[i]:
                    forces[i * 6 : (i + 1) * 6] = np.maximum(
                        forces[i * 6 : (i + 1) * 6], f
                    )
        return forces

    def touch_reading(self) -> np.ndarray:
        """60-vector [left 30, right 30] of ADC readings."""
        return np.concatenate(
            [self.touch_models[h].synthesize(self.contact_forces(h)) for h in HANDS]
        )

    # -- observation ------------------------------------------------------

    def observe(self, cameras, with_depth: bool = True):
        from ..data.episode import Observation
        from .render import render

        images = {}
        depths = {}
        for cam in cameras:
            rgb, depth = render(self, cam)
            images[cam.name] = rgb
            depths[cam.name] = depth if with_depth else None
        return Observation(
            tick=self.tick,
            eef_left=pose_to_vec6(self.eef_pose("left")),
            eef_right=pose_to_vec6(self.eef_pose("right")),
            arm_q_left=self.arm_q["left"].copy(),
            arm_q_right=self.arm_q["right"].copy(),
            hand_q_left=self.hand_q["left"].copy(),
            hand_q_right=self.hand_q["right"].copy(),
            touch=self.touch_reading(),
            images=images,
            depths=depths if with_depth else {k: None for k in images},
        )
