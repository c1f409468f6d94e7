from .schedule import DiffusionSchedule, cosine_alpha_bar
from .nets import (
    Denoiser,
    DenoiserConfig,
    EncoderConfig,
    MlpEncoder,
    VisionEncoder,
)
from .policy import DiffusionPolicy, PolicyConfig
from .training import EmaTracker, TrainConfig, train_policy
from .checkpoint import load_checkpoint, save_checkpoint

__all__ = [
    "Denoiser",
    "DenoiserConfig",
    "DiffusionPolicy",
    "DiffusionSchedule",
    "EmaTracker",
    "EncoderConfig",
    "MlpEncoder",
    "PolicyConfig",
    "TrainConfig",
    "VisionEncoder",
    "cosine_alpha_bar",
    "load_checkpoint",
    "save_checkpoint",
    "train_policy",
]
