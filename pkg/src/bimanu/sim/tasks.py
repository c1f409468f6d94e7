"""Toy task definitions: seeded scene initialization and success predicates.

Tasks:
  handover       right hand picks a slippery ball off a stand and hands it
                 to the left hand, which carries it away
  handover_slip  handover variant where the ball's required grip is only
                 observable through touch (two look-alike variants with
                 different min_grip and contact signature)
  stack          both hands restack a two-block pile onto the yellow base
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..geometry import Pose
from .world import ObjectState, World, WorldConfig

TASK_NAMES = ("handover", "handover_slip", "stack")


@dataclass(frozen=True)
class TaskSpec:
    name: str
    max_ticks: int
    init_jitter: float  # uniform +- meters on object xy at reset

    def __post_init__(self):
        if self.name not in TASK_NAMES:
            raise ValueError(f"unknown task {self.name!r}")


def make_task(name: str) -> TaskSpec:
    if name == "stack":
        return TaskSpec(name, max_ticks=180, init_jitter=0.02)
    if name == "handover_slip":
        return TaskSpec(name, max_ticks=150, init_jitter=0.015)
    return TaskSpec("handover", max_ticks=150, init_jitter=0.02)


def slip_variant(seed: int) -> tuple[float, float]:
    """(min_grip, touch_factor) for the slip task: even seeds are the easy
    grippy ball, odd seeds the slippery one that needs a hard grip and
    presses back weakly on the touch sensors."""
    if seed % 2 == 0:
        return 0.35, 1.0
    return 0.80, 0.45


def make_objects(spec: TaskSpec, seed: int) -> list[ObjectState]:
    rng = np.random.default_rng(seed)

    def jit():
        return rng.uniform(-spec.init_jitter, spec.init_jitter, 2)

    if spec.name in ("handover", "handover_slip"):
        if spec.name == "handover_slip":
            min_grip, touch_factor = slip_variant(seed)
        else:
            min_grip, touch_factor = 0.40, 1.0
        dx, dy = jit()
        stand = ObjectState(
            name="stand",
            shape="box",
            size=np.array([0.07, 0.07, 0.05]),
            pose=Pose(np.array([0.55 + dx, -0.15 + dy, 0.05])),
            static=True,
            color=(120, 120, 130),
        )
        ball = ObjectState(
            name="ball",
            shape="sphere",
            size=np.array([0.03]),
            pose=Pose(np.array([0.55 + dx, -0.15 + dy, 0.13])),
            slippery=True,
            min_grip=min_grip,
            touch_factor=touch_factor,
            color=(240, 210, 60),
        )
        return [stand, ball]

    # stack: red+blue pile and the yellow base
    px, py = np.array([0.55, -0.12]) + jit()
    bx, by = np.array([0.55, 0.12]) + jit()
    half = np.array([0.03, 0.03, 0.025])
    return [
        ObjectState(
            name="yellow",
            shape="box",
            size=half.copy(),
            pose=Pose(np.array([bx, by, 0.025])),
            static=True,
            min_grip=0.45,
            color=(240, 220, 40),
        ),
        ObjectState(
            name="red",
            shape="box",
            size=half.copy(),
            pose=Pose(np.array([px, py, 0.025])),
            min_grip=0.45,
            color=(230, 60, 60),
        ),
        ObjectState(
            name="blue",
            shape="box",
            size=half.copy(),
            pose=Pose(np.array([px, py, 0.075])),
            min_grip=0.45,
            color=(60, 90, 230),
        ),
    ]


def make_world(spec: TaskSpec, seed: int, config: WorldConfig | None = None) -> World:
    return World(config or WorldConfig.default(), make_objects(spec, seed), seed=seed)


def success(world: World, spec: TaskSpec) -> bool:
    if spec.name in ("handover", "handover_slip"):
        ball = world.find_object("ball")
        if ball.held_by != "left":
            return False
        dist = np.linalg.norm(world.palm_center("left") - world.palm_center("right"))
        return bool(dist > 0.10)

    yellow = world.find_object("yellow")
    blue = world.find_object("blue")
    red = world.find_object("red")
    if blue.held_by is not None or red.held_by is not None:
        return False
    if min(blue.settled_ticks, red.settled_ticks) < 10:
        return False
    ytop = yellow.pose.translation[2] + yellow.size[2]

    def stacked(block, base_xy, base_top):
        p = block.pose.translation
        return (
            np.linalg.norm(p[:2] - base_xy) <= 0.01
            and abs(p[2] - (base_top + block.size[2])) <= 0.005
        )

    if not stacked(blue, yellow.pose.translation[:2], ytop):
        return False
    btop = blue.pose.translation[2] + blue.size[2]
    return stacked(red, blue.pose.translation[:2], btop)
