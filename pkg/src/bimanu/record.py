"""Live teleoperation recording against the simulator.

The core TeleopRecorder is a pure tick function over ControllerState
pairs, so a recorded episode depends only on (task, seed, controller
trace); the websocket front end (RecordServer) adds transport, not
semantics. In lockstep mode every controller message advances exactly one
tick and gets the resulting observation back, which makes console
round-trip recordings bit-reproducible.
"""

from __future__ import annotations

import asyncio
import logging
from pathlib import Path

import numpy as np
import websockets

from .data.episode import EpisodeWriter, Frame
from .sim.render import CameraModel, default_cameras
from .sim.tasks import TaskSpec, make_world, success
from .sim.world import SimCommands
from .serve.protocol import (
    ProtocolError,
    decode_message,
    encode_message,
    observation_to_body,
)
from .teleop import ControlImpl, ControllerState, TeleopSession

log = logging.getLogger(__name__)


class TeleopRecorder:
    def __init__(
        self,
        spec: TaskSpec,
        seed: int,
        out_dir,
        cameras: list[CameraModel] | None = None,
        control_impl: ControlImpl = ControlImpl.IK_POSITION,
        with_depth: bool = False,
    ):
        self.spec = spec
        self.seed = seed
        self.out_dir = Path(out_dir)
        self.cameras = cameras if cameras is not None else default_cameras()
        self.with_depth = with_depth
        self.world = make_world(spec, seed)
        self.sessions = {
            h: TeleopSession(model=self.world.arm_model(h), control_impl=control_impl)
            for h in ("left", "right")
        }
        for h in ("left", "right"):
            self.sessions[h].reset(self.world.arm_cmd[h])
        self._writer: EpisodeWriter | None = None
        self._episode_path: Path | None = None
        self.recording = False

    def start_episode(self, name: str) -> Path:
        if self.recording:
            raise RuntimeError("already recording")
        self.out_dir.mkdir(parents=True, exist_ok=True)
        path = self.out_dir / f"{name}.bmep"
        header = {
            "schema_version": 1,
            "task": self.spec.name,
            "seed": self.seed,
            "cameras": [c.to_dict() for c in self.cameras],
            "tick_rate": 10,
            "modalities": {"rgb": True, "depth": self.with_depth, "touch": True},
        }
        self._writer = EpisodeWriter(
            path, header, [c.name for c in self.cameras], self.with_depth
        )
        self._episode_path = path
        self.recording = True
        return path

    def stop_episode(self) -> Path:
        if not self.recording:
            raise RuntimeError("not recording")
        self._writer.close(success(self.world, self.spec))
        self.recording = False
        path = self._episode_path
        self._writer = None
        self._episode_path = None
        return path

    def tick(self, left: ControllerState, right: ControllerState):
        """One 10 Hz tick: teleop -> sim -> (optional) frame record.
        Returns the pre-step observation, or None if a sample was
        malformed (the tick is skipped entirely)."""
        if not (left.is_valid() and right.is_valid()):
            return None
        commands = {}
        for h, cs in (("left", left), ("right", right)):
            cmd = self.sessions[h].step(cs, self.world.arm_q[h])
            if cmd is None:
                return None
            commands[h] = cmd
        obs = self.world.observe(self.cameras, with_depth=self.with_depth)
        if self.recording:
            action = np.concatenate(
                [
                    self.sessions["left"].last_commanded_q,
                    self.sessions["right"].last_commanded_q,
                    commands["left"].hand_joints,
                    commands["right"].hand_joints,
                ]
            )
            self._writer.append(Frame(obs, action))
        sim_cmds = SimCommands(
            arm_left=commands["left"].arm,
            arm_right=commands["right"].arm,
            hand_left=commands["left"].hand_joints,
            hand_right=commands["right"].hand_joints,
        )
        self.world.step(sim_cmds)
        return obs

    def run_trace(self, trace: list[dict], episode_name: str) -> Path:
        """Direct ControllerState injection: the reference path the console
        round trip is compared against."""
        self.start_episode(episode_name)
        for entry in trace:
            left = ControllerState.from_dict(entry["left"])
            right = ControllerState.from_dict(entry["right"])
            self.tick(left, right)
        return self.stop_episode()


class RecordServer:
    """Websocket front end for the console; same envelope as serving.

    ctrl bodies: {"kind": "controller_state", "left": ..., "right": ...}
    advances one tick (lockstep) and replies with the observation;
    {"kind": "start_record", "name": ...} / {"kind": "stop_record"} manage
    the episode file; {"kind": "heartbeat"} is acked, which is also the
    idle behavior when no console is connected.
    """

    def __init__(self, recorder: TeleopRecorder, host="127.0.0.1", port=8766):
        self.recorder = recorder
        self.host = host
        self.port = port

    async def _handle(self, ws):
        async for raw in ws:
            try:
                mtype, body = decode_message(raw)
                if mtype != "ctrl":
                    raise ProtocolError(f"record endpoint expects ctrl, got {mtype!r}")
                kind = body.get("kind")
                if kind == "heartbeat":
                    await ws.send(encode_message("ctrl", {"kind": "ack"}))
                elif kind == "start_record":
                    path = self.recorder.start_episode(body.get("name", "episode"))
                    await ws.send(
                        encode_message("ctrl", {"kind": "recording", "path": str(path)})
                    )
                elif kind == "stop_record":
                    path = self.recorder.stop_episode()
                    await ws.send(
                        encode_message("ctrl", {"kind": "saved", "path": str(path)})
                    )
                elif kind == "controller_state":
                    left = ControllerState.from_dict(body["left"])
                    right = ControllerState.from_dict(body["right"])
                    obs = self.recorder.tick(left, right)
                    if obs is None:
                        await ws.send(
                            encode_message("err", {"message": "malformed controller sample"})
                        )
                    else:
                        reply = observation_to_body(obs, seq=obs.tick)
                        reply["engaged"] = {
                            h: self.recorder.sessions[h].engaged for h in ("left", "right")
                        }
                        reply["recording"] = self.recorder.recording
                        await ws.send(encode_message("obs", reply))
                else:
                    raise ProtocolError(f"unknown ctrl kind {kind!r}")
            except (ProtocolError, KeyError, TypeError, ValueError, RuntimeError) as e:
                await ws.send(encode_message("err", {"message": str(e)}))

    async def serve_forever(self, ready_event: asyncio.Event | None = None):
        async with websockets.serve(self._handle, self.host, self.port):
            log.info("record server listening on %s:%d", self.host, self.port)
            if ready_event is not None:
                ready_event.set()
            await asyncio.Future()

    def run(self):
        asyncio.run(self.serve_forever())
