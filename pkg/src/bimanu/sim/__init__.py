from .world import (
    GraspGeometry,
    ObjectState,
    SimCommands,
    World,
    WorldConfig,
)
from .render import CameraModel, render
from .tasks import TaskSpec, make_task, success
from .scripted import scripted_demo

__all__ = [
    "CameraModel",
    "GraspGeometry",
    "ObjectState",
    "SimCommands",
    "TaskSpec",
    "World",
    "WorldConfig",
    "make_task",
    "render",
    "scripted_demo",
    "success",
]
