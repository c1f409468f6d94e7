"""Rigid poses, the 6-vector pose serialization, and min/max normalization.

Conventions fixed for the whole repo:
  - quaternions are (w, x, y, z), unit norm, active rotations, right-handed
  - the 6-vector form is [tx, ty, tz, ax, ay, az] with axis-angle encoded
    as axis * angle, angle canonicalized to [0, pi]
  - normalization maps min -> -1 and max -> +1 per dimension, no clipping
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_QUAT_TOL = 1e-9


def _quat_normalize(q: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(q)
    if n < 1e-12:
        raise ValueError("zero-norm quaternion")
    return q / n


def quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hamilton product a*b, both (w,x,y,z)."""
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def quat_conjugate(q: np.ndarray) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Rotate vector v by unit quaternion q."""
    qv = np.array([0.0, v[0], v[1], v[2]])
    return quat_multiply(quat_multiply(q, qv), quat_conjugate(q))[1:]


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def quat_from_axis_angle(aa: np.ndarray) -> np.ndarray:
    """Unit quaternion from an axis*angle 3-vector."""
    aa = np.asarray(aa, dtype=float)
    angle = np.linalg.norm(aa)
    if angle < 1e-12:
        # first-order series: sin(a/2)/a ~ 1/2
        return _quat_normalize(np.array([1.0, 0.5 * aa[0], 0.5 * aa[1], 0.5 * aa[2]]))
    axis = aa / angle
    half = 0.5 * angle
    s = np.sin(half)
    return np.array([np.cos(half), axis[0] * s, axis[1] * s, axis[2] * s])


def quat_to_axis_angle(q: np.ndarray) -> np.ndarray:
    """Canonical axis*angle of a unit quaternion: angle in [0, pi].

    At angle exactly pi the axis sign is chosen so its first nonzero
    component is positive, making the map a function on rotations.
    """
    q = np.asarray(q, dtype=float)
    if q[0] < 0:
        q = -q
    vn = np.linalg.norm(q[1:])
    if vn < 1e-12:
        return np.zeros(3)
    angle = 2.0 * np.arctan2(vn, q[0])
    axis = q[1:] / vn
    if angle > np.pi - 1e-12:
        # pick the canonical representative at the pi boundary
        angle = np.pi
        for c in axis:
            if abs(c) > 1e-12:
                if c < 0:
                    axis = -axis
                break
    return axis * angle


@dataclass(frozen=True)
class Pose:
    """Rigid transform: rotation (unit quaternion, wxyz) then translation."""

    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))
    rotation: np.ndarray = field(default_factory=lambda: np.array([1.0, 0, 0, 0]))

    def __post_init__(self):
        t = np.asarray(self.translation, dtype=float).reshape(3)
        q = _quat_normalize(np.asarray(self.rotation, dtype=float).reshape(4))
        object.__setattr__(self, "translation", t)
        object.__setattr__(self, "rotation", q)
        assert abs(np.linalg.norm(q) - 1.0) < _QUAT_TOL

    @staticmethod
    def identity() -> "Pose":
        return Pose()

    @staticmethod
    def from_axis_angle(translation, aa) -> "Pose":
        return Pose(np.asarray(translation, dtype=float), quat_from_axis_angle(aa))

    def compose(self, other: "Pose") -> "Pose":
        """self applied after other's frame: result = self ∘ other."""
        return Pose(
            self.translation + quat_rotate(self.rotation, other.translation),
            quat_multiply(self.rotation, other.rotation),
        )

    def inverse(self) -> "Pose":
        qi = quat_conjugate(self.rotation)
        return Pose(-quat_rotate(qi, self.translation), qi)

    def apply(self, point: np.ndarray) -> np.ndarray:
        return self.translation + quat_rotate(self.rotation, np.asarray(point, float))

    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = quat_to_matrix(self.rotation)
        m[:3, 3] = self.translation
        return m


def pose_to_vec6(p: Pose) -> np.ndarray:
    """Serialize a pose to [translation, axis*angle] with canonical angle."""
    return np.concatenate([p.translation, quat_to_axis_angle(p.rotation)])


def vec6_to_pose(v: np.ndarray) -> Pose:
    v = np.asarray(v, dtype=float).reshape(6)
    return Pose(v[:3], quat_from_axis_angle(v[3:]))


def rotation_log(q_err: np.ndarray) -> np.ndarray:
    """Axis*angle 3-vector of a unit quaternion (smooth near identity)."""
    return quat_to_axis_angle(q_err)


def pose_error(target: Pose, current: Pose) -> np.ndarray:
    """6-d error [dp; dtheta]: translation difference and rotation log of
    target * current^-1, both in the base frame."""
    dp = target.translation - current.translation
    dq = quat_multiply(target.rotation, quat_conjugate(current.rotation))
    return np.concatenate([dp, rotation_log(dq)])


@dataclass(frozen=True)
class NormStats:
    """Per-dimension linear normalization bounds.

    fixed_mask marks dimensions whose bounds were set a priori (hand joint
    maxima, raw image ranges) rather than fit from training data.
    """

    lo: np.ndarray
    hi: np.ndarray
    fixed_mask: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float).reshape(-1)
        hi = np.asarray(self.hi, dtype=float).reshape(-1)
        mask = np.asarray(self.fixed_mask, dtype=bool).reshape(-1)
        if not (lo.shape == hi.shape == mask.shape):
            raise ValueError("stats field shapes disagree")
        if np.any(hi <= lo):
            raise ValueError("max must exceed min in every dimension")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "fixed_mask", mask)

    @staticmethod
    def from_data(
        data: np.ndarray, widen: float = 1e-6, min_width: float = 0.0
    ) -> "NormStats":
        """Fit min/max over axis 0; degenerate dims widened by +-widen.

        min_width symmetrically expands any dimension narrower than that
        around its center. Use it for observation inputs: a dimension that
        is nearly constant in the data would otherwise map small real-world
        deviations to enormous normalized values.
        """
        data = np.asarray(data, dtype=float)
        lo = data.min(axis=0)
        hi = data.max(axis=0)
        flat = hi <= lo
        lo = np.where(flat, lo - widen, lo)
        hi = np.where(flat, hi + widen, hi)
        if min_width > 0.0:
            pad = np.maximum(min_width - (hi - lo), 0.0) * 0.5
            lo = lo - pad
            hi = hi + pad
        return NormStats(lo, hi, np.zeros(lo.shape, dtype=bool))

    @staticmethod
    def fixed(lo, hi) -> "NormStats":
        lo = np.asarray(lo, dtype=float).reshape(-1)
        hi = np.asarray(hi, dtype=float).reshape(-1)
        return NormStats(lo, hi, np.ones(lo.shape, dtype=bool))

    def to_dict(self) -> dict:
        return {
            "min": self.lo.tolist(),
            "max": self.hi.tolist(),
            "fixed_mask": self.fixed_mask.astype(int).tolist(),
        }

    @staticmethod
    def from_dict(d: dict) -> "NormStats":
        return NormStats(
            np.array(d["min"]), np.array(d["max"]), np.array(d["fixed_mask"], dtype=bool)
        )


def normalize(x: np.ndarray, stats: NormStats) -> np.ndarray:
    """Map stats.lo -> -1 and stats.hi -> +1 linearly; no clipping."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != stats.lo.shape[0]:
        raise ValueError(f"dimension mismatch: {x.shape[-1]} vs {stats.lo.shape[0]}")
    return 2.0 * (x - stats.lo) / (stats.hi - stats.lo) - 1.0


def denormalize(y: np.ndarray, stats: NormStats) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != stats.lo.shape[0]:
        raise ValueError(f"dimension mismatch: {y.shape[-1]} vs {stats.lo.shape[0]}")
    return (y + 1.0) * 0.5 * (stats.hi - stats.lo) + stats.lo
