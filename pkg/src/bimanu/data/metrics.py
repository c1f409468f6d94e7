"""ActionMSE evaluation and the modality-masking harness."""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from .episode import Episode, Observation
from .stats import DatasetStats

CHUNK_LEN = 16


def gt_chunk(actions_norm: np.ndarray, t: int) -> np.ndarray:
    """Ground-truth chunk at frame t: normalized actions t..t+15, the final
    action repeated past the episode end."""
    T = actions_norm.shape[0]
    idx = np.minimum(np.arange(t, t + CHUNK_LEN), T - 1)
    return actions_norm[idx]


def action_mse(
    predictor, test_episodes: list[Episode], stats: DatasetStats, stride: int = 1
) -> float:
    """Mean over test frames and the 16x24 chunk entries of the squared
    error between predicted and ground-truth normalized action sequences.

    predictor maps an Observation to a (16, 24) normalized chunk; stride > 1
    subsamples the evaluated frames for cheaper estimates.
    """
    total = 0.0
    count = 0
    for ep in test_episodes:
        actions_norm = stats.normalize_action(ep.actions())
        for t, frame in enumerate(ep.frames):
            if t % stride != 0:
                continue
            pred = np.asarray(predictor(frame.obs), dtype=float)
            if pred.shape != (CHUNK_LEN, 24):
                raise ValueError(f"predictor returned shape {pred.shape}")
            gt = gt_chunk(actions_norm, t)
            total += float(np.mean((pred - gt) ** 2))
            count += 1
    return total / count


def mask_modality(obs: Observation, drop: set[str]) -> Observation:
    """Drop observation channels: dropped entries become None so the policy
    never instantiates an encoder for them (not zero-filled).

    Recognized names: vision, touch, depth, wrist_cams, third_cam.
    """
    unknown = drop - {"vision", "touch", "depth", "wrist_cams", "third_cam"}
    if unknown:
        raise ValueError(f"unknown modalities: {sorted(unknown)}")
    images = dict(obs.images)
    depths = dict(obs.depths)
    if "vision" in drop:
        images = {k: None for k in images}
        depths = {k: None for k in depths}
    if "depth" in drop:
        depths = {k: None for k in depths}
    if "wrist_cams" in drop:
        for k in list(images):
            if k.startswith("wrist"):
                images[k] = None
                depths[k] = None
    if "third_cam" in drop:
        for k in list(images):
            if not k.startswith("wrist"):
                images[k] = None
                depths[k] = None
    touch = None if "touch" in drop else obs.touch
    return replace(obs, touch=touch, images=images, depths=depths)
