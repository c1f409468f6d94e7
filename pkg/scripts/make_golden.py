#!/usr/bin/env python3
"""Regenerate the golden episode fixture (tests/golden/episode_v1.*).

Only run this when the episode format schema version is bumped — the
whole point of the fixture is that its bytes never change within a
schema version.
"""

import hashlib
import json
from pathlib import Path

from bimanu.data.episode import read_episode, write_episode
from bimanu.sim.render import default_cameras
from bimanu.sim.scripted import scripted_demo
from bimanu.sim.tasks import make_task

GOLDEN = Path(__file__).resolve().parent.parent / "tests" / "golden"
SEED = 7
FRAMES = 6

ep, _world = scripted_demo(
    make_task("handover"), SEED, cameras=default_cameras(12, 16), with_depth=True
)
full_success = ep.success
ep.frames = ep.frames[:FRAMES]
out = GOLDEN / "episode_v1.bmep"
write_episode(ep, out)

loaded = read_episode(out)
meta = {
    "task": loaded.task,
    "seed": loaded.seed,
    "success": loaded.success,
    "frames": len(loaded.frames),
    "actions_sha256": hashlib.sha256(
        loaded.actions().astype("float64").tobytes()
    ).hexdigest(),
    "file_sha256": hashlib.sha256(out.read_bytes()).hexdigest(),
}
assert meta["success"] == full_success
(GOLDEN / "episode_v1.json").write_text(json.dumps(meta, indent=2) + "\n")
print(json.dumps(meta, indent=2))
