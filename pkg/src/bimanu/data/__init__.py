from .episode import (
    ChecksumError,
    Episode,
    EpisodeFormatError,
    Frame,
    Observation,
    TruncationError,
    VersionError,
    read_episode,
    write_episode,
)
from .stats import DatasetStats, fit_stats
from .metrics import action_mse, gt_chunk, mask_modality

__all__ = [
    "ChecksumError",
    "DatasetStats",
    "Episode",
    "EpisodeFormatError",
    "Frame",
    "Observation",
    "TruncationError",
    "VersionError",
    "action_mse",
    "fit_stats",
    "gt_chunk",
    "mask_modality",
    "read_episode",
    "write_episode",
]
