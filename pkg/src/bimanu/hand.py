"""Anthropomorphic 6-DoF hand: grip/thumbstick control mapping, the
four-bar PIP coupling, and synthetic fingertip touch readings.

Joint order, fixed repo-wide (degrees):
    [index MCP, middle MCP, ring MCP, pinky MCP, thumb flexion, thumb rotator]
with maxima HAND_JOINT_MAX = [110, 110, 110, 110, 90, 120] and minima 0.

Touch layout per hand: 5 fingertips x 6 sensors = 30 readings, finger-major
in the order [index, middle, ring, pinky, thumb].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HAND_JOINT_MAX = np.array([110.0, 110.0, 110.0, 110.0, 90.0, 120.0])
HAND_DOF = 6
SENSORS_PER_FINGER = 6
FINGERS = 5
TOUCH_PER_HAND = FINGERS * SENSORS_PER_FINGER  # 30


def grip_to_joints(grip: float) -> np.ndarray:
    """Power-grasp mapping: one scalar closes the four non-thumb MCPs
    proportionally, full grip reaching the 110-degree maximum."""
    g = float(np.clip(grip, 0.0, 1.0))
    return np.full(4, g * 110.0)


def thumbstick_to_thumb(stick) -> np.ndarray:
    """Map thumbstick [-1,1]^2 to thumb (flexion, rotator) degrees.

    y axis drives flexion (max 90), x axis drives the rotator (max 120),
    each through the affine [-1,1] -> [0, max] map.
    """
    s = np.clip(np.asarray(stick, dtype=float).reshape(2), -1.0, 1.0)
    flexion = (s[1] + 1.0) * 0.5 * 90.0
    rotator = (s[0] + 1.0) * 0.5 * 120.0
    return np.array([flexion, rotator])


def hand_command_to_joints(grip: float, stick) -> np.ndarray:
    """Full 6-joint target from one (grip, thumbstick) command."""
    return np.concatenate([grip_to_joints(grip), thumbstick_to_thumb(stick)])


def coupled_pip(mcp_deg: float, ratio: float = 1.0) -> float:
    """PIP angle driven by the MCP through the four-bar linkage; rendering
    and contact geometry only, never part of the action space."""
    return ratio * mcp_deg


@dataclass(frozen=True)
class TouchModelConfig:
    baseline_lo: float = 200.0
    baseline_hi: float = 400.0
    contact_value: float = 1200.0
    contact_gain: float = 400.0  # ADC per newton; 2 N clears 1000 from any baseline
    noise_std: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        if not (self.baseline_lo < self.baseline_hi < self.contact_value):
            raise ValueError("require baseline_lo < baseline_hi < contact_value")


class TouchModel:
    """Per-hand touch synthesizer.

    Each sensor gets a constant baseline drawn once per hand instance from
    [baseline_lo, baseline_hi]; per-step Gaussian noise (noise_std) rides on
    top, and contact force adds contact_gain ADC per newton. Readings are
    clipped at zero.
    """

    def __init__(self, cfg: TouchModelConfig | None = None):
        self.cfg = cfg or TouchModelConfig()
        self._rng = np.random.default_rng(self.cfg.rng_seed)
        self.baselines = self._rng.uniform(
            self.cfg.baseline_lo, self.cfg.baseline_hi, TOUCH_PER_HAND
        )

    def synthesize(self, contact_forces: np.ndarray) -> np.ndarray:
        """30-vector of ADC readings from per-sensor normal forces (N)."""
        f = np.asarray(contact_forces, dtype=float).reshape(TOUCH_PER_HAND)
        if np.any(f < 0):
            raise ValueError("contact forces must be nonnegative")
        reading = self.baselines + self.cfg.contact_gain * f
        if self.cfg.noise_std > 0:
            reading = reading + self._rng.normal(0.0, self.cfg.noise_std, TOUCH_PER_HAND)
        return np.maximum(reading, 0.0)


def synthesize_touch(contact_forces, cfg: TouchModelConfig, rng: np.random.Generator) -> np.ndarray:
    """One-shot form of TouchModel.synthesize with an external RNG for the
    per-step noise; baselines are drawn from the config seed so identical
    (cfg, forces, rng state) give identical output."""
    model = TouchModel(cfg)
    f = np.asarray(contact_forces, dtype=float).reshape(TOUCH_PER_HAND)
    if np.any(f < 0):
        raise ValueError("contact forces must be nonnegative")
    reading = model.baselines + cfg.contact_gain * f
    if cfg.noise_std > 0:
        reading = reading + rng.normal(0.0, cfg.noise_std, TOUCH_PER_HAND)
    return np.maximum(reading, 0.0)
