"""Episode recording types and the bit-exact on-disk format.

File layout (all integers little-endian):

    8 bytes   magic "BMEP0001"
    u32       header length
    ...       header JSON (UTF-8)
    repeat:   u32 frame length, frame bytes
    u32       0xFFFFFFFF end-of-frames marker
    u32       footer length
    ...       footer JSON ({"outcome": bool})
    u32       CRC32 of every preceding byte

Frames are fixed-layout binary records (see Frame.to_bytes); the format is
stream-appendable while recording and seekable afterwards.
"""

from __future__ import annotations

import json
import os
import struct
import zlib
from dataclasses import dataclass, field, replace

import numpy as np

MAGIC = b"BMEP0001"
SCHEMA_VERSION = 1
END_MARKER = 0xFFFFFFFF
ACTION_DIM = 24


class EpisodeFormatError(Exception):
    """Base class for episode decode failures."""


class VersionError(EpisodeFormatError):
    pass


class TruncationError(EpisodeFormatError):
    pass


class ChecksumError(EpisodeFormatError):
    pass


@dataclass
class Observation:
    """One policy input frame."""

    tick: int
    eef_left: np.ndarray  # PoseVec6
    eef_right: np.ndarray
    arm_q_left: np.ndarray  # recorded, not a policy input
    arm_q_right: np.ndarray
    hand_q_left: np.ndarray  # degrees
    hand_q_right: np.ndarray
    touch: np.ndarray | None  # (60,) or None when masked out
    images: dict[str, np.ndarray | None]  # camera name -> HxWx3 u8
    depths: dict[str, np.ndarray | None]  # camera name -> HxW u16

    def proprio(self) -> np.ndarray:
        """24-d policy proprioception: both EEF PoseVec6 + both hands'
        joint positions; arm joint positions are deliberately excluded."""
        return np.concatenate(
            [self.eef_left, self.eef_right, self.hand_q_left, self.hand_q_right]
        )


@dataclass
class Frame:
    obs: Observation
    action: np.ndarray  # (24,) [left arm 6, right arm 6, left hand 6, right hand 6]

    def to_bytes(self, camera_order: list[str], with_depth: bool) -> bytes:
        o = self.obs
        parts = [struct.pack("<I", o.tick)]
        for arr in (
            o.eef_left,
            o.eef_right,
            o.arm_q_left,
            o.arm_q_right,
            o.hand_q_left,
            o.hand_q_right,
            o.touch,
            self.action,
        ):
            parts.append(np.asarray(arr, dtype="<f4").tobytes())
        for name in camera_order:
            parts.append(np.ascontiguousarray(o.images[name], dtype=np.uint8).tobytes())
            if with_depth:
                parts.append(np.asarray(o.depths[name], dtype="<u2").tobytes())
        return b"".join(parts)

    @staticmethod
    def from_bytes(
        buf: bytes, camera_shapes: list[tuple[str, int, int]], with_depth: bool
    ) -> "Frame":
        off = 0
        (tick,) = struct.unpack_from("<I", buf, off)
        off += 4

        def take_f32(n):
            nonlocal off
            arr = np.frombuffer(buf, dtype="<f4", count=n, offset=off).astype(np.float64)
            off += 4 * n
            return arr

        eef_l, eef_r = take_f32(6), take_f32(6)
        aq_l, aq_r = take_f32(6), take_f32(6)
        hq_l, hq_r = take_f32(6), take_f32(6)
        touch = take_f32(60)
        action = take_f32(ACTION_DIM)
        images, depths = {}, {}
        for name, h, w in camera_shapes:
            n = h * w * 3
            images[name] = (
                np.frombuffer(buf, dtype=np.uint8, count=n, offset=off)
                .reshape(h, w, 3)
                .copy()
            )
            off += n
            if with_depth:
                depths[name] = (
                    np.frombuffer(buf, dtype="<u2", count=h * w, offset=off)
                    .reshape(h, w)
                    .copy()
                )
                off += 2 * h * w
            else:
                depths[name] = None
        if off != len(buf):
            raise TruncationError("frame payload size mismatch")
        obs = Observation(tick, eef_l, eef_r, aq_l, aq_r, hq_l, hq_r, touch, images, depths)
        return Frame(obs, action)


@dataclass
class Episode:
    task: str
    seed: int
    cameras: list[dict]  # CameraModel.to_dict() entries
    frames: list[Frame] = field(default_factory=list)
    success: bool = False
    tick_rate: int = 10
    with_depth: bool = True
    schema_version: int = SCHEMA_VERSION

    def header_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "task": self.task,
            "seed": self.seed,
            "cameras": self.cameras,
            "tick_rate": self.tick_rate,
            "modalities": {"rgb": True, "depth": self.with_depth, "touch": True},
        }

    def camera_order(self) -> list[str]:
        return [c["name"] for c in self.cameras]

    def camera_shapes(self) -> list[tuple[str, int, int]]:
        return [(c["name"], c["resolution"][0], c["resolution"][1]) for c in self.cameras]

    def actions(self) -> np.ndarray:
        return np.stack([f.action for f in self.frames])


class EpisodeWriter:
    """Streaming writer; the file is complete only after close()."""

    def __init__(self, path, header: dict, camera_order, with_depth: bool):
        self.path = str(path)
        self.tmp = self.path + ".tmp"
        self.camera_order = list(camera_order)
        self.with_depth = with_depth
        self._crc = 0
        self._f = open(self.tmp, "wb")
        hdr = json.dumps(header, sort_keys=True).encode("utf-8")
        self._write(MAGIC)
        self._write(struct.pack("<I", len(hdr)))
        self._write(hdr)

    def _write(self, data: bytes):
        self._crc = zlib.crc32(data, self._crc)
        self._f.write(data)

    def append(self, frame: Frame):
        payload = frame.to_bytes(self.camera_order, self.with_depth)
        self._write(struct.pack("<I", len(payload)))
        self._write(payload)

    def close(self, success: bool):
        footer = json.dumps({"outcome": bool(success)}).encode("utf-8")
        self._write(struct.pack("<I", END_MARKER))
        self._write(struct.pack("<I", len(footer)))
        self._write(footer)
        self._f.write(struct.pack("<I", self._crc & 0xFFFFFFFF))
        self._f.close()
        os.replace(self.tmp, self.path)


def write_episode(ep: Episode, path) -> None:
    w = EpisodeWriter(path, ep.header_dict(), ep.camera_order(), ep.with_depth)
    for frame in ep.frames:
        w.append(frame)
    w.close(ep.success)


def read_episode(path) -> Episode:
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < len(MAGIC) + 4 or data[: len(MAGIC)] != MAGIC:
        raise VersionError("bad magic")
    if len(data) < len(MAGIC) + 4 + 4:
        raise TruncationError("file too short")
    crc_stored = struct.unpack_from("<I", data, len(data) - 4)[0]
    crc_actual = zlib.crc32(data[:-4]) & 0xFFFFFFFF
    if crc_stored != crc_actual:
        # distinguish a clean truncation from corruption where possible
        _raise_truncation_or_checksum(data)
    off = len(MAGIC)
    (hlen,) = struct.unpack_from("<I", data, off)
    off += 4
    try:
        header = json.loads(data[off : off + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ChecksumError(f"header decode failed: {e}") from e
    off += hlen
    if header.get("schema_version") != SCHEMA_VERSION:
        raise VersionError(f"unsupported schema_version {header.get('schema_version')}")
    cameras = header["cameras"]
    shapes = [(c["name"], c["resolution"][0], c["resolution"][1]) for c in cameras]
    with_depth = header["modalities"]["depth"]
    frames: list[Frame] = []
    while True:
        if off + 4 > len(data) - 4:
            raise TruncationError("missing end marker")
        (flen,) = struct.unpack_from("<I", data, off)
        off += 4
        if flen == END_MARKER:
            break
        if off + flen > len(data) - 4:
            raise TruncationError("truncated frame")
        frames.append(Frame.from_bytes(data[off : off + flen], shapes, with_depth))
        off += flen
    (flen,) = struct.unpack_from("<I", data, off)
    off += 4
    footer = json.loads(data[off : off + flen].decode("utf-8"))
    ticks = [f.obs.tick for f in frames]
    if ticks and ticks != list(range(ticks[0], ticks[0] + len(ticks))):
        raise EpisodeFormatError("frame ticks are not consecutive")
    return Episode(
        task=header["task"],
        seed=header["seed"],
        cameras=cameras,
        frames=frames,
        success=footer["outcome"],
        tick_rate=header["tick_rate"],
        with_depth=with_depth,
        schema_version=header["schema_version"],
    )


def _raise_truncation_or_checksum(data: bytes):
    """A file cut short lacks the end marker; call that truncation, anything
    else a checksum failure."""
    off = len(MAGIC)
    if off + 4 > len(data):
        raise TruncationError("truncated header length")
    (hlen,) = struct.unpack_from("<I", data, off)
    off += 4 + hlen
    if off > len(data):
        raise TruncationError("truncated header")
    while off + 4 <= len(data):
        (flen,) = struct.unpack_from("<I", data, off)
        off += 4
        if flen == END_MARKER:
            raise ChecksumError("checksum mismatch")
        off += flen
    raise TruncationError("file ends mid-frame")
