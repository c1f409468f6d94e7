"""Executing websocket client: streams observations at 10 Hz, ingests
chunk messages into the ensemble buffer, executes the ensembled action,
and safe-stops (repeat last action, episode flagged failed) on connection
loss.
"""

from __future__ import annotations

import asyncio

import numpy as np
import websockets

from ..teleop import ArmCommand
from ..sim.render import default_cameras
from ..sim.tasks import TaskSpec, make_world, success
from ..sim.world import SimCommands
from .ensemble import EnsembleBuffer, Hold
from .protocol import (
    ProtocolError,
    body_to_chunk,
    decode_message,
    encode_message,
    observation_to_body,
)


async def run_remote_episode(
    uri: str,
    spec: TaskSpec,
    seed: int,
    stats,
    max_ticks: int | None = None,
    tick_period: float = 0.1,
    with_depth: bool = False,
    inject_latency_ticks: int = 0,
) -> tuple[bool, int]:
    """One deployment episode against a remote server; returns
    (success, ticks_run). Connection loss flags the episode failed.
    inject_latency_ticks holds each received chunk back that many ticks
    before the ensemble may use it (artificial latency for robustness
    checks)."""
    cameras = default_cameras()
    world = make_world(spec, seed)
    buffer = EnsembleBuffer()
    staged: list[tuple[int, object]] = []  # (release_tick, chunk msg)
    max_ticks = max_ticks or spec.max_ticks
    last_action = None
    seq = 0
    # Failure to connect at all is a runtime error for the caller;
    # connection loss mid-episode is a safe-stop (episode failed).
    ws = await websockets.connect(uri)
    try:
        async with ws:

            async def drain():
                while True:
                    try:
                        raw = await asyncio.wait_for(ws.recv(), timeout=1e-3)
                    except asyncio.TimeoutError:
                        return
                    try:
                        mtype, body = decode_message(raw)
                        if mtype == "chunk":
                            msg = body_to_chunk(body)
                            if inject_latency_ticks > 0:
                                staged.append((world.tick + inject_latency_ticks, msg))
                            else:
                                buffer.add(msg)
                    except ProtocolError:
                        continue

            for _ in range(max_ticks):
                tick_start = asyncio.get_running_loop().time()
                obs = world.observe(cameras, with_depth=with_depth)
                seq += 1
                await ws.send(encode_message("obs", observation_to_body(obs, seq)))
                await drain()
                for release_tick, msg in [s for s in staged if s[0] <= world.tick]:
                    buffer.add(msg)
                    staged.remove((release_tick, msg))
                norm = buffer.ensemble_action(obs.tick)
                if isinstance(norm, Hold):
                    action = last_action
                else:
                    action = stats.denormalize_action(norm)
                    last_action = action
                if action is not None:
                    cmds = SimCommands(
                        arm_left=ArmCommand(joints=action[0:6]),
                        arm_right=ArmCommand(joints=action[6:12]),
                        hand_left=action[12:18],
                        hand_right=action[18:24],
                    )
                else:
                    cmds = SimCommands()
                world.step(cmds)
                if success(world, spec):
                    break
                elapsed = asyncio.get_running_loop().time() - tick_start
                if tick_period > elapsed:
                    await asyncio.sleep(tick_period - elapsed)
    except (websockets.ConnectionClosed, OSError):
        return False, world.tick  # safe-stop: episode failed
    return success(world, spec), world.tick
