import json
from pathlib import Path

import numpy as np
import pytest

from bimanu.sim.render import default_cameras
from bimanu.sim.scripted import scripted_demo
from bimanu.sim.tasks import make_task

REPO_ROOT = Path(__file__).resolve().parents[1]
SCHEMA_DIR = REPO_ROOT / "schemas"


@pytest.fixture(scope="session")
def tiny_cameras():
    """Low-resolution cameras so policy tests stay fast."""
    return default_cameras(12, 16)


@pytest.fixture(scope="session")
def small_demos(tiny_cameras):
    """Six scripted handover demonstrations at tiny resolution."""
    spec = make_task("handover")
    episodes = []
    for seed in range(6):
        ep, _ = scripted_demo(spec, seed, cameras=tiny_cameras, with_depth=True)
        episodes.append(ep)
    return episodes


@pytest.fixture(scope="session")
def schema_validators():
    """name -> jsonschema validator with local cross-references resolved."""
    from jsonschema import Draft202012Validator
    from referencing import Registry, Resource

    registry = Registry()
    schemas = {}
    for p in SCHEMA_DIR.glob("*.schema.json"):
        s = json.loads(p.read_text())
        schemas[p.name] = s
        registry = registry.with_resource(p.name, Resource.from_contents(s))
    return {
        name: Draft202012Validator(s, registry=registry) for name, s in schemas.items()
    }


def random_unit_quaternion(rng: np.random.Generator) -> np.ndarray:
    q = rng.normal(size=4)
    return q / np.linalg.norm(q)
