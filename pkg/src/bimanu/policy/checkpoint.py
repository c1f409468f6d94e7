"""Checkpoint file: header JSON (policy config, dataset stats and their
hash, tensor index) followed by named parameter tensors as little-endian
f32 with shapes. Stats ride inside so deployment can never mismatch the
training normalization.
"""

from __future__ import annotations

import json
import os
import struct

import numpy as np
import torch

from ..data.stats import DatasetStats
from .policy import DiffusionPolicy, PolicyConfig

MAGIC = b"BMCK0001"


def save_checkpoint(policy: DiffusionPolicy, path, extra: dict | None = None) -> None:
    state = policy.state_dict()
    index = []
    blobs = []
    for name, tensor in state.items():
        arr = tensor.detach().cpu().numpy().astype("<f4")
        index.append({"name": name, "shape": list(arr.shape)})
        blobs.append(arr.tobytes())
    header = {
        "config": policy.cfg.to_dict(),
        "stats": policy.stats.to_dict(),
        "stats_hash": policy.stats.digest(),
        "tensors": index,
        "extra": extra or {},
    }
    hdr = json.dumps(header, sort_keys=True).encode("utf-8")
    tmp = str(path) + ".tmp"
    with open(tmp, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(hdr)))
        f.write(hdr)
        for blob in blobs:
            f.write(blob)
    os.replace(tmp, str(path))


def load_checkpoint(path) -> DiffusionPolicy:
    with open(path, "rb") as f:
        magic = f.read(8)
        if magic != MAGIC:
            raise ValueError("not a checkpoint file")
        (hlen,) = struct.unpack("<I", f.read(4))
        header = json.loads(f.read(hlen).decode("utf-8"))
        cfg = PolicyConfig.from_dict(header["config"])
        stats = DatasetStats.from_dict(header["stats"])
        if stats.digest() != header["stats_hash"]:
            raise ValueError("stats hash mismatch")
        policy = DiffusionPolicy(cfg, stats)
        state = {}
        for entry in header["tensors"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            arr = np.frombuffer(f.read(4 * count), dtype="<f4").reshape(shape)
            state[entry["name"]] = torch.as_tensor(arr.copy())
    policy.load_state_dict(state)
    policy.eval()
    return policy
