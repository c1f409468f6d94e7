"""JSON wire protocol shared by the inference server, the deployment
client, and the teleop console.

Envelope: {"type": "obs" | "chunk" | "ctrl" | "err", "body": {...}}.
Images travel as base64 of their raw bytes with declared shape and dtype.
JSON schemas for every message live in schemas/ at the repo root.
"""

from __future__ import annotations

import base64
import json

import numpy as np

from ..data.episode import Observation

MESSAGE_TYPES = ("obs", "chunk", "ctrl", "err")


class ProtocolError(Exception):
    pass


def encode_message(msg_type: str, body: dict) -> str:
    if msg_type not in MESSAGE_TYPES:
        raise ProtocolError(f"unknown message type {msg_type!r}")
    return json.dumps({"type": msg_type, "body": body})


def decode_message(raw: str | bytes) -> tuple[str, dict]:
    try:
        msg = json.loads(raw)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise ProtocolError(f"malformed JSON: {e}") from e
    if not isinstance(msg, dict) or "type" not in msg or "body" not in msg:
        raise ProtocolError("message must be an object with type and body")
    if msg["type"] not in MESSAGE_TYPES:
        raise ProtocolError(f"unknown message type {msg['type']!r}")
    if not isinstance(msg["body"], dict):
        raise ProtocolError("body must be an object")
    return msg["type"], msg["body"]


def _encode_array(arr: np.ndarray) -> dict:
    arr = np.ascontiguousarray(arr)
    return {
        "shape": list(arr.shape),
        "dtype": str(arr.dtype),
        "data": base64.b64encode(arr.tobytes()).decode("ascii"),
    }


def _decode_array(d: dict) -> np.ndarray:
    try:
        raw = base64.b64decode(d["data"])
        return np.frombuffer(raw, dtype=np.dtype(d["dtype"])).reshape(d["shape"]).copy()
    except (KeyError, ValueError, TypeError) as e:
        raise ProtocolError(f"bad array field: {e}") from e


def observation_to_body(obs: Observation, seq: int) -> dict:
    return {
        "seq": int(seq),
        "timestep": int(obs.tick),
        "eef_left": np.asarray(obs.eef_left, float).tolist(),
        "eef_right": np.asarray(obs.eef_right, float).tolist(),
        "arm_q_left": np.asarray(obs.arm_q_left, float).tolist(),
        "arm_q_right": np.asarray(obs.arm_q_right, float).tolist(),
        "hand_q_left": np.asarray(obs.hand_q_left, float).tolist(),
        "hand_q_right": np.asarray(obs.hand_q_right, float).tolist(),
        "touch": None if obs.touch is None else np.asarray(obs.touch, float).tolist(),
        "images": {
            k: (None if v is None else _encode_array(v)) for k, v in obs.images.items()
        },
        "depths": {
            k: (None if v is None else _encode_array(v)) for k, v in obs.depths.items()
        },
    }


def body_to_observation(body: dict) -> tuple[Observation, int]:
    try:
        obs = Observation(
            tick=int(body["timestep"]),
            eef_left=np.array(body["eef_left"], dtype=float),
            eef_right=np.array(body["eef_right"], dtype=float),
            arm_q_left=np.array(body["arm_q_left"], dtype=float),
            arm_q_right=np.array(body["arm_q_right"], dtype=float),
            hand_q_left=np.array(body["hand_q_left"], dtype=float),
            hand_q_right=np.array(body["hand_q_right"], dtype=float),
            touch=None if body["touch"] is None else np.array(body["touch"], dtype=float),
            images={
                k: (None if v is None else _decode_array(v))
                for k, v in body["images"].items()
            },
            depths={
                k: (None if v is None else _decode_array(v))
                for k, v in body["depths"].items()
            },
        )
        return obs, int(body["seq"])
    except (KeyError, TypeError, ValueError) as e:
        raise ProtocolError(f"bad observation body: {e}") from e


def chunk_to_body(based_on_timestep: int, chunk: np.ndarray, model_seq: int) -> dict:
    return {
        "based_on_timestep": int(based_on_timestep),
        "chunk": np.asarray(chunk, dtype=float).tolist(),
        "model_seq": int(model_seq),
    }


def body_to_chunk(body: dict):
    from .ensemble import ActionChunkMsg

    try:
        return ActionChunkMsg(
            based_on_timestep=int(body["based_on_timestep"]),
            chunk=np.array(body["chunk"], dtype=np.float32),
            model_seq=int(body.get("model_seq", 0)),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ProtocolError(f"bad chunk body: {e}") from e
