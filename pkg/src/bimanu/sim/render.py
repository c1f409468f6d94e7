"""Flat-shaded ray-cast rendering of the world: spheres and oriented boxes
for objects, sphere primitives for arm links, palms, and fingertips.

Camera frame: +z forward, +x right, +y down, pinhole intrinsics. Depth is
the distance along the ray's z axis in meters, quantized to u16 millimeters
with 65535 as the no-hit sentinel.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..geometry import Pose, pose_to_vec6, quat_to_matrix, vec6_to_pose
from ..hand import HAND_JOINT_MAX
from ..kinematics import _joint_frames

BACKGROUND = np.array([40, 40, 45], dtype=np.uint8)
DEPTH_SENTINEL = np.uint16(65535)
ARM_COLOR = {"left": (90, 110, 230), "right": (230, 110, 90)}


@dataclass(frozen=True)
class CameraModel:
    name: str
    kind: str  # "wrist_left" | "wrist_right" | "third_view"
    pose: Pose  # world pose, or the wrist-mount offset for wrist cameras
    fx: float
    fy: float
    cx: float
    cy: float
    height: int = 24
    width: int = 32

    def __post_init__(self):
        if self.height <= 0 or self.width <= 0:
            raise ValueError("resolution must be positive")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "pose": pose_to_vec6(self.pose).tolist(),
            "intrinsics": [self.fx, self.fy, self.cx, self.cy],
            "resolution": [self.height, self.width],
        }

    @staticmethod
    def from_dict(d: dict) -> "CameraModel":
        fx, fy, cx, cy = d["intrinsics"]
        h, w = d["resolution"]
        return CameraModel(
            d["name"], d["kind"], vec6_to_pose(np.array(d["pose"])), fx, fy, cx, cy, h, w
        )


def default_cameras(height: int = 24, width: int = 32) -> list[CameraModel]:
    """Two wrist cameras plus a stationary third view over the workspace."""
    f = width * 1.2
    cx, cy = width / 2.0, height / 2.0
    third = look_at(np.array([1.35, 0.0, 0.85]), np.array([0.45, 0.0, 0.15]))
    wrist = Pose(np.array([-0.08, 0.0, 0.10])).compose(
        look_at(np.zeros(3), np.array([0.25, 0.0, -0.08]))
    )
    return [
        CameraModel("wrist_left", "wrist_left", wrist, f, f, cx, cy, height, width),
        CameraModel("wrist_right", "wrist_right", wrist, f, f, cx, cy, height, width),
        CameraModel("third_view", "third_view", third, f, f, cx, cy, height, width),
    ]


def look_at(eye: np.ndarray, target: np.ndarray, up=(0.0, 0.0, 1.0)) -> Pose:
    """Camera pose with +z toward target."""
    fwd = target - eye
    fwd = fwd / np.linalg.norm(fwd)
    up = np.asarray(up, dtype=float)
    right = np.cross(fwd, up)
    if np.linalg.norm(right) < 1e-9:
        right = np.array([1.0, 0.0, 0.0])
    right = right / np.linalg.norm(right)
    down = np.cross(fwd, right)
    R = np.stack([right, down, fwd], axis=1)
    tr = np.trace(R)
    if tr > 0:
        s = np.sqrt(tr + 1.0) * 2
        q = np.array(
            [0.25 * s, (R[2, 1] - R[1, 2]) / s, (R[0, 2] - R[2, 0]) / s, (R[1, 0] - R[0, 1]) / s]
        )
    else:
        i = int(np.argmax(np.diag(R)))
        j, k = (i + 1) % 3, (i + 2) % 3
        s = np.sqrt(R[i, i] - R[j, j] - R[k, k] + 1.0) * 2
        q = np.zeros(4)
        q[0] = (R[k, j] - R[j, k]) / s
        q[1 + i] = 0.25 * s
        q[1 + j] = (R[j, i] + R[i, j]) / s
        q[1 + k] = (R[k, i] + R[i, k]) / s
    return Pose(eye, q)


@dataclass
class _Primitives:
    sphere_centers: np.ndarray  # (Ns, 3)
    sphere_radii: np.ndarray  # (Ns,)
    sphere_colors: np.ndarray  # (Ns, 3) uint8
    box_poses: list[Pose]
    box_half: np.ndarray  # (Nb, 3)
    box_colors: np.ndarray  # (Nb, 3)


def _gather_primitives(world) -> _Primitives:
    centers, radii, colors = [], [], []
    box_poses, box_half, box_colors = [], [], []
    for obj in world.objects:
        if obj.shape == "sphere":
            centers.append(obj.pose.translation)
            radii.append(obj.size[0])
            colors.append(obj.color)
        else:
            box_poses.append(obj.pose)
            box_half.append(obj.size)
            box_colors.append(obj.color)
    g = world.config.grasp
    for h in ("left", "right"):
        frames = _joint_frames(world.arm_model(h), world.arm_q[h])
        for fr in frames[1:]:
            centers.append(fr.translation)
            radii.append(0.035)
            colors.append(ARM_COLOR[h])
        palm = world.palm_pose(h)
        centers.append(palm.translation)
        radii.append(0.03)
        colors.append(ARM_COLOR[h])
        # fingertips: radial aperture model, fingers fanned in the palm yz
        dirs = np.array(
            [
                [0.0, 0.30, 0.95],
                [0.0, 0.10, 0.99],
                [0.0, -0.10, 0.99],
                [0.0, -0.30, 0.95],
                [0.0, 0.0, -1.0],  # thumb opposes
            ]
        )
        dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
        for i in range(5):
            ap = g.aperture(world.hand_q[h][i], HAND_JOINT_MAX[i])
            centers.append(palm.apply(dirs[i] * (ap + 0.012)))
            radii.append(0.012)
            colors.append((235, 220, 180))
    return _Primitives(
        np.array(centers),
        np.array(radii),
        np.array(colors, dtype=np.uint8),
        box_poses,
        np.array(box_half) if box_half else np.zeros((0, 3)),
        np.array(box_colors, dtype=np.uint8) if box_colors else np.zeros((0, 3), np.uint8),
    )


def _camera_world_pose(world, camera: CameraModel) -> Pose:
    if camera.kind == "wrist_left":
        return world.eef_pose("left").compose(camera.pose)
    if camera.kind == "wrist_right":
        return world.eef_pose("right").compose(camera.pose)
    return camera.pose


def render(world, camera: CameraModel) -> tuple[np.ndarray, np.ndarray]:
    """Returns (rgb u8 HxWx3, depth u16 HxW in millimeters)."""
    cam_pose = _camera_world_pose(world, camera)
    H, W = camera.height, camera.width
    u = np.arange(W) + 0.5
    v = np.arange(H) + 0.5
    uu, vv = np.meshgrid(u, v)
    dirs_cam = np.stack(
        [(uu - camera.cx) / camera.fx, (vv - camera.cy) / camera.fy, np.ones_like(uu)],
        axis=-1,
    ).reshape(-1, 3)
    R = quat_to_matrix(cam_pose.rotation)
    origins = cam_pose.translation
    dirs = dirs_cam @ R.T  # unnormalized; t parameter is then depth along z

    prims = _gather_primitives(world)
    n_rays = dirs.shape[0]
    best_t = np.full(n_rays, np.inf)
    best_color = np.tile(BACKGROUND, (n_rays, 1))

    if len(prims.sphere_radii):
        oc = origins[None, None, :] - prims.sphere_centers[None, :, :]  # (1,Ns,3)
        d = dirs[:, None, :]  # (N,1,3)
        a = np.sum(d * d, axis=-1)
        b = 2.0 * np.sum(d * oc, axis=-1)
        c = np.sum(oc * oc, axis=-1) - prims.sphere_radii[None, :] ** 2
        disc = b * b - 4 * a * c
        hit = disc >= 0
        sq = np.sqrt(np.where(hit, disc, 0.0))
        t = (-b - sq) / (2 * a)
        t = np.where(hit & (t > 1e-6), t, np.inf)
        idx = np.argmin(t, axis=1)
        tmin = t[np.arange(n_rays), idx]
        better = tmin < best_t
        best_t = np.where(better, tmin, best_t)
        best_color[better] = prims.sphere_colors[idx[better]]

    for bp, half, color in zip(prims.box_poses, prims.box_half, prims.box_colors):
        inv = bp.inverse()
        Rb = quat_to_matrix(inv.rotation)
        o_b = Rb @ origins + inv.translation
        d_b = dirs @ Rb.T
        with np.errstate(divide="ignore", invalid="ignore"):
            t1 = (-half - o_b) / d_b
            t2 = (half - o_b) / d_b
        tnear = np.nanmax(np.minimum(t1, t2), axis=1)
        tfar = np.nanmin(np.maximum(t1, t2), axis=1)
        t = np.where((tnear <= tfar) & (tfar > 1e-6), np.maximum(tnear, 1e-6), np.inf)
        better = t < best_t
        best_t = np.where(better, t, best_t)
        best_color[better] = color

    rgb = best_color.reshape(H, W, 3).astype(np.uint8)
    depth_m = best_t.reshape(H, W)
    depth_mm = np.where(
        np.isfinite(depth_m), np.clip(np.round(depth_m * 1000.0), 0, 65535), 65535
    ).astype(np.uint16)
    return rgb, depth_mm
