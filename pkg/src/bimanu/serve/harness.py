"""Deterministic loopback deployment harness.

Reproduces the asynchronous server/client protocol in simulated time: the
server keeps a single latest-wins observation slot, one inference runs at
a time and takes a configurable number of ticks, finished chunks are
delivered to the client's ensemble buffer, and the client executes the
ensembled action at every 10 Hz tick. No threads, so a (policy, task,
seed, latency) tuple fixes the whole trace bitwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..data.episode import Observation
from ..teleop import ArmCommand
from ..sim.render import CameraModel, default_cameras
from ..sim.tasks import TaskSpec, make_world, success
from ..sim.world import SimCommands
from .ensemble import HOLD, ActionChunkMsg, EnsembleBuffer, Hold


@dataclass
class TickRecord:
    tick: int
    sent_timestep: int
    delivered_bases: list[int]
    executed_base_rows: list[tuple[int, int]]  # (based_on_timestep, row) used
    held: bool
    action: np.ndarray  # denormalized 24-vector actually executed


@dataclass
class LoopbackHarness:
    """Simulated-latency asynchronous inference loop around a predictor
    (Observation -> (16, 24) normalized chunk)."""

    predictor: object
    latency_ticks: int = 0
    buffer: EnsembleBuffer = field(default_factory=EnsembleBuffer)
    ensemble: bool = True  # False: execute the newest covering chunk only

    def __post_init__(self):
        self._mailbox_obs: Observation | None = None
        self._busy_until: int | None = None
        self._inflight: tuple[int, np.ndarray] | None = None
        self._model_seq = 0
        self.records: list[TickRecord] = []

    def _server_poll(self, tick: int) -> list[ActionChunkMsg]:
        """Advance the simulated server to this tick; returns chunks that
        finished by now."""
        delivered = []
        while True:
            if self._inflight is not None and self._busy_until <= tick:
                base, chunk = self._inflight
                self._model_seq += 1
                delivered.append(ActionChunkMsg(base, chunk, self._model_seq))
                self._inflight = None
                self._busy_until = None
            if self._inflight is None and self._mailbox_obs is not None:
                obs = self._mailbox_obs
                self._mailbox_obs = None
                chunk = np.asarray(self.predictor(obs), dtype=np.float32)
                self._inflight = (obs.tick, chunk)
                self._busy_until = obs.tick + self.latency_ticks
                continue
            break
        return delivered

    def _select_action(self, tick: int):
        if self.ensemble:
            return self.buffer.ensemble_action(tick), None
        self.buffer.prune(tick)
        covering = [c for c in self.buffer.chunks if c.covers(tick)]
        if not covering:
            return HOLD, None
        newest = max(covering, key=lambda c: c.based_on_timestep)
        return newest.chunk[tick - newest.based_on_timestep], newest

    def step(self, obs: Observation) -> tuple[np.ndarray | Hold, TickRecord]:
        """One client tick: send the observation, ingest finished chunks,
        return the ensembled normalized action (or Hold)."""
        tick = obs.tick
        self._mailbox_obs = obs  # latest-wins overwrite
        delivered = self._server_poll(tick)
        for msg in delivered:
            self.buffer.add(msg)
        action, newest = self._select_action(tick)
        held = isinstance(action, Hold)
        if self.ensemble:
            used = [
                (c.based_on_timestep, tick - c.based_on_timestep)
                for c in self.buffer.chunks
                if c.covers(tick)
            ]
        else:
            used = [] if newest is None else [
                (newest.based_on_timestep, tick - newest.based_on_timestep)
            ]
        rec = TickRecord(
            tick=tick,
            sent_timestep=tick,
            delivered_bases=[m.based_on_timestep for m in delivered],
            executed_base_rows=[] if held else used,
            held=held,
            action=np.zeros(0),
        )
        self.records.append(rec)
        return action, rec


def run_deployment(
    policy,
    spec: TaskSpec,
    seed: int,
    latency_ticks: int = 0,
    max_ticks: int | None = None,
    cameras: list[CameraModel] | None = None,
    ensemble: bool = True,
    with_depth: bool = False,
    predictor=None,
    sample_seed: int = 0,
):
    """Deploy a policy in the simulator through the loopback harness.

    Returns (success, harness, action_trace) where action_trace is the
    (T, 24) denormalized executed action sequence.
    """
    from ..policy.training import make_predictor

    if predictor is None:
        predictor = make_predictor(policy, seed=sample_seed)
    cameras = cameras if cameras is not None else default_cameras()
    world = make_world(spec, seed)
    harness = LoopbackHarness(predictor, latency_ticks=latency_ticks)
    harness.ensemble = ensemble
    stats = policy.stats if policy is not None else None
    max_ticks = max_ticks or spec.max_ticks
    last_action = None
    trace = []
    drop_vision = policy is not None and len(policy.cfg.cameras) == 0
    drop_touch = policy is not None and not policy.cfg.use_touch
    for _ in range(max_ticks):
        obs = world.observe(cameras, with_depth=with_depth)
        if drop_touch:
            obs.touch = None
        if drop_vision:
            obs.images = {k: None for k in obs.images}
            obs.depths = {k: None for k in obs.depths}
        norm_action, rec = harness.step(obs)
        if isinstance(norm_action, Hold):
            action = last_action
        else:
            action = (
                stats.denormalize_action(norm_action)
                if stats is not None
                else np.asarray(norm_action, dtype=float)
            )
        if action is not None:
            rec.action = np.asarray(action, dtype=float)
            trace.append(rec.action)
            last_action = action
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
    return success(world, spec), harness, np.array(trace)


def mean_action_jump(trace: np.ndarray) -> float:
    """Mean per-tick L2 jump of the executed action sequence."""
    if len(trace) < 2:
        return 0.0
    return float(np.mean(np.linalg.norm(np.diff(trace, axis=0), axis=1)))
