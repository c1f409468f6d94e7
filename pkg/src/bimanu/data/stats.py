"""Normalization statistics fitting and serialization.

Bounds are fit per dimension over the training split only, except the hand
joints (observations and action dims alike), which always use the fixed
bounds min 0 / max [110, 110, 110, 110, 90, 120], and raw image ranges:
RGB [0, 255], depth [0, 65535].
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..geometry import NormStats, denormalize, normalize
from ..hand import HAND_JOINT_MAX
from .episode import Episode

RGB_STATS = NormStats.fixed([0.0] * 1, [255.0] * 1)
DEPTH_STATS = NormStats.fixed([0.0] * 1, [65535.0] * 1)


def _hand_stats() -> NormStats:
    return NormStats.fixed(np.zeros(6), HAND_JOINT_MAX)


@dataclass(frozen=True)
class DatasetStats:
    eef: NormStats  # 12: left + right PoseVec6
    touch: NormStats  # 60
    arm_action: NormStats  # 12: left + right arm joint targets
    hand: NormStats  # 6, fixed bounds, reused for both hands, obs and action

    def normalize_action(self, a: np.ndarray) -> np.ndarray:
        a = np.asarray(a, dtype=float)
        out = np.empty_like(a)
        out[..., :12] = normalize(a[..., :12], self.arm_action)
        out[..., 12:18] = normalize(a[..., 12:18], self.hand)
        out[..., 18:24] = normalize(a[..., 18:24], self.hand)
        return out

    def denormalize_action(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        out = np.empty_like(y)
        out[..., :12] = denormalize(y[..., :12], self.arm_action)
        out[..., 12:18] = denormalize(y[..., 12:18], self.hand)
        out[..., 18:24] = denormalize(y[..., 18:24], self.hand)
        return out

    def normalize_proprio(self, p: np.ndarray) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        out = np.empty_like(p)
        out[..., :12] = normalize(p[..., :12], self.eef)
        out[..., 12:18] = normalize(p[..., 12:18], self.hand)
        out[..., 18:24] = normalize(p[..., 18:24], self.hand)
        # observations met at deployment can drift outside the training
        # range; bound them so the encoders never see runaway inputs
        return np.clip(out, -3.0, 3.0)

    def normalize_touch(self, t: np.ndarray) -> np.ndarray:
        return np.clip(normalize(t, self.touch), -3.0, 3.0)

    def to_dict(self) -> dict:
        return {
            "eef": self.eef.to_dict(),
            "touch": self.touch.to_dict(),
            "arm_action": self.arm_action.to_dict(),
            "hand": self.hand.to_dict(),
            "rgb": RGB_STATS.to_dict(),
            "depth": DEPTH_STATS.to_dict(),
        }

    @staticmethod
    def from_dict(d: dict) -> "DatasetStats":
        return DatasetStats(
            eef=NormStats.from_dict(d["eef"]),
            touch=NormStats.from_dict(d["touch"]),
            arm_action=NormStats.from_dict(d["arm_action"]),
            hand=NormStats.from_dict(d["hand"]),
        )

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True))

    @staticmethod
    def load(path) -> "DatasetStats":
        return DatasetStats.from_dict(json.loads(Path(path).read_text()))

    def digest(self) -> str:
        return hashlib.sha256(
            json.dumps(self.to_dict(), sort_keys=True).encode()
        ).hexdigest()


def fit_stats(train_episodes: list[Episode]) -> DatasetStats:
    """Per-dimension min/max over every frame of the training split; the
    fold is commutative so episode order never matters."""
    if not train_episodes:
        raise ValueError("no training episodes")
    eef_rows, touch_rows, arm_rows = [], [], []
    for ep in train_episodes:
        for f in ep.frames:
            eef_rows.append(np.concatenate([f.obs.eef_left, f.obs.eef_right]))
            touch_rows.append(f.obs.touch)
            arm_rows.append(f.action[:12])
    return DatasetStats(
        # floor the EEF widths: rotation dims barely move in demonstrations,
        # and a near-zero fitted width would blow small closed-loop pose
        # deviations up to astronomic normalized values
        eef=NormStats.from_data(np.stack(eef_rows), min_width=0.1),
        touch=NormStats.from_data(np.stack(touch_rows)),
        arm_action=NormStats.from_data(np.stack(arm_rows)),
        hand=_hand_stats(),
    )
