"""Asynchronous websocket inference server.

One receiver coroutine keeps a latest-wins observation slot per
connection; one worker runs the diffusion sampler in a thread executor and
streams back chunk messages tagged with the consumed observation's
timestep. Malformed messages get an "err" frame and the connection stays
up.
"""

from __future__ import annotations

import asyncio
import logging

import websockets

from .protocol import (
    ProtocolError,
    body_to_observation,
    chunk_to_body,
    decode_message,
    encode_message,
)

log = logging.getLogger(__name__)


class InferenceServer:
    def __init__(self, predictor, host: str = "127.0.0.1", port: int = 8765):
        self.predictor = predictor
        self.host = host
        self.port = port
        self._server = None

    async def _handle(self, ws):
        latest: list = [None]  # [(obs, seq)] slot, replace-on-write
        fresh = asyncio.Event()
        model_seq = 0
        loop = asyncio.get_running_loop()

        async def worker():
            nonlocal model_seq
            while True:
                await fresh.wait()
                fresh.clear()
                item = latest[0]
                latest[0] = None
                if item is None:
                    continue
                obs, _seq = item
                chunk = await loop.run_in_executor(None, self.predictor, obs)
                model_seq += 1
                await ws.send(
                    encode_message("chunk", chunk_to_body(obs.tick, chunk, model_seq))
                )

        task = asyncio.create_task(worker())
        try:
            async for raw in ws:
                try:
                    mtype, body = decode_message(raw)
                    if mtype == "obs":
                        latest[0] = body_to_observation(body)
                        fresh.set()
                    elif mtype == "ctrl":
                        if body.get("kind") == "heartbeat":
                            await ws.send(encode_message("ctrl", {"kind": "ack"}))
                    else:
                        raise ProtocolError(f"unexpected message type {mtype!r}")
                except ProtocolError as e:
                    await ws.send(encode_message("err", {"message": str(e)}))
        finally:
            task.cancel()

    async def serve_forever(self):
        async with websockets.serve(self._handle, self.host, self.port) as server:
            self._server = server
            log.info("inference server listening on %s:%d", self.host, self.port)
            await asyncio.Future()

    def run(self):
        asyncio.run(self.serve_forever())
