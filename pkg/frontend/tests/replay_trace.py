"""Reference path for the console round-trip test: feed a recorded
ControllerState trace directly to the teleop recorder, bypassing the
websocket console entirely, and print the resulting episode path."""

import json
import sys

from bimanu.record import TeleopRecorder
from bimanu.sim.render import default_cameras
from bimanu.sim.tasks import make_task

spec = json.load(open(sys.argv[1]))
recorder = TeleopRecorder(
    make_task(spec["task"]),
    seed=spec["seed"],
    out_dir=spec["out_dir"],
    cameras=default_cameras(spec["height"], spec["width"]),
    with_depth=spec["with_depth"],
)
path = recorder.run_trace(spec["trace"], spec["name"])
print(path)
