"""Temporal ensembling of action chunks on the executing client.

A chunk predicted from the observation at timestep b covers execution
ticks b .. b+15; at each tick the client averages, unweighted, the covering
rows of every retained chunk. Chunks older than the staleness horizon K
are discarded.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

CHUNK_LEN = 16


class Hold:
    """Sentinel: no covering chunk; repeat the last executed action."""

    def __repr__(self):
        return "Hold"


HOLD = Hold()


@dataclass(frozen=True)
class ActionChunkMsg:
    based_on_timestep: int
    chunk: np.ndarray  # (16, D); range policing happens at the wire protocol
    model_seq: int = 0

    def __post_init__(self):
        chunk = np.asarray(self.chunk, dtype=np.float32)
        if chunk.ndim != 2 or chunk.shape[0] != CHUNK_LEN:
            raise ValueError(f"chunk must be ({CHUNK_LEN}, D), got {chunk.shape}")
        if not np.all(np.isfinite(chunk)):
            raise ValueError("chunk entries must be finite")
        object.__setattr__(self, "chunk", chunk)

    def covers(self, tick: int) -> bool:
        return self.based_on_timestep <= tick < self.based_on_timestep + CHUNK_LEN


@dataclass
class EnsembleBuffer:
    max_staleness: int = 16  # ticks; retain chunks with base >= tick - K
    chunks: list[ActionChunkMsg] = field(default_factory=list)
    weighting: str = "uniform"  # "uniform" | "exponential"
    exp_decay: float = 0.5  # weight decay per tick of age, exponential mode

    def add(self, msg: ActionChunkMsg) -> None:
        self.chunks.append(msg)

    def prune(self, current_tick: int) -> None:
        self.chunks = [
            c for c in self.chunks if c.based_on_timestep >= current_tick - self.max_staleness
        ]

    def ensemble_action(self, current_tick: int):
        """Mean over covering retained chunks of the row indexed
        (current_tick - based_on_timestep); Hold when nothing covers."""
        self.prune(current_tick)
        rows, weights = [], []
        for c in self.chunks:
            if c.covers(current_tick):
                rows.append(c.chunk[current_tick - c.based_on_timestep])
                if self.weighting == "exponential":
                    weights.append(self.exp_decay ** (current_tick - c.based_on_timestep))
                else:
                    weights.append(1.0)
        if not rows:
            return HOLD
        w = np.asarray(weights, dtype=np.float64)
        return np.average(np.stack(rows).astype(np.float64), axis=0, weights=w)
