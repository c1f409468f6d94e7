"""Dataset directory layout: episode files plus a split.json listing
train/test filenames and a stats.json with the normalization bounds fit on
the train split."""

from __future__ import annotations

import json
import os
from pathlib import Path

from .episode import Episode, read_episode

SPLIT_FILE = "split.json"
STATS_FILE = "stats.json"


def write_json_atomic(path, obj) -> None:
    path = str(path)
    tmp = path + ".tmp"
    with open(tmp, "w") as f:
        json.dump(obj, f, indent=2, sort_keys=True)
    os.replace(tmp, path)


def write_split(data_dir, train: list[str], test: list[str]) -> Path:
    path = Path(data_dir) / SPLIT_FILE
    write_json_atomic(path, {"train": sorted(train), "test": sorted(test)})
    return path


def load_split(data_dir) -> dict[str, list[str]]:
    path = Path(data_dir) / SPLIT_FILE
    split = json.loads(path.read_text())
    if not isinstance(split, dict) or "train" not in split or "test" not in split:
        raise ValueError(f"{path} must contain 'train' and 'test' lists")
    return {"train": list(split["train"]), "test": list(split["test"])}


def default_split(names: list[str], test_every: int = 5) -> tuple[list[str], list[str]]:
    """Deterministic split: every test_every-th episode (by sorted order)
    held out, at least one in each part when possible."""
    names = sorted(names)
    test = [n for i, n in enumerate(names) if i % test_every == test_every - 1]
    train = [n for n in names if n not in test]
    if not test and len(train) > 1:
        test = [train.pop()]
    return train, test


def load_episodes(data_dir, names: list[str]) -> list[Episode]:
    root = Path(data_dir)
    return [read_episode(root / n) for n in names]
