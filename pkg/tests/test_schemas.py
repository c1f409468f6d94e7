"""JSON schemas: every live protocol message must validate, and mutated
messages must be rejected."""

import json

import numpy as np
import pytest
from jsonschema import ValidationError

from bimanu.geometry import Pose
from bimanu.kinematics import default_arm
from bimanu.serve.protocol import chunk_to_body, observation_to_body
from bimanu.teleop import ControllerState


def make_obs(tick=0, cams=("third_view",)):
    from bimanu.data.episode import Observation

    rng = np.random.default_rng(tick)
    return Observation(
        tick=tick,
        eef_left=rng.normal(size=6),
        eef_right=rng.normal(size=6),
        arm_q_left=np.zeros(6),
        arm_q_right=np.zeros(6),
        hand_q_left=np.zeros(6),
        hand_q_right=np.zeros(6),
        touch=rng.uniform(200, 4000, 60),
        images={c: rng.integers(0, 256, (4, 4, 3), dtype=np.uint8) for c in cams},
        depths={c: rng.integers(0, 65536, (4, 4), dtype=np.uint16) for c in cams},
    )


def envelope(msg_type, body):
    return {"type": msg_type, "body": body}


class TestLiveMessagesValidate:
    def test_obs_envelope(self, schema_validators):
        v = schema_validators["envelope.schema.json"]
        v.validate(envelope("obs", observation_to_body(make_obs(3), seq=1)))

    def test_obs_with_masked_channels(self, schema_validators):
        obs = make_obs(0)
        obs.touch = None
        obs.images["third_view"] = None
        obs.depths["third_view"] = None
        schema_validators["envelope.schema.json"].validate(
            envelope("obs", observation_to_body(obs, seq=0))
        )

    def test_chunk_envelope(self, schema_validators):
        body = chunk_to_body(4, np.zeros((16, 24)), 2)
        schema_validators["envelope.schema.json"].validate(envelope("chunk", body))

    def test_ctrl_envelopes(self, schema_validators):
        v = schema_validators["envelope.schema.json"]
        for body in (
            {"kind": "heartbeat"},
            {"kind": "ack"},
            {"kind": "start_record", "name": "ep1"},
            {"kind": "recording", "path": "recordings/ep1.bmep"},
            {"kind": "stop_record"},
            {"kind": "saved", "path": "recordings/ep1.bmep"},
        ):
            v.validate(envelope("ctrl", body))

    def test_ctrl_controller_state(self, schema_validators):
        cs = ControllerState(
            pose=Pose(np.array([0.1, 0.2, 0.3])),
            grip=0.5,
            thumbstick=np.array([0.0, -1.0]),
            trigger=True,
            timestamp=1.5,
        )
        body = {
            "kind": "controller_state",
            "left": cs.to_dict(),
            "right": cs.to_dict(),
        }
        schema_validators["envelope.schema.json"].validate(envelope("ctrl", body))
        schema_validators["controller_state.schema.json"].validate(cs.to_dict())

    def test_err_envelope(self, schema_validators):
        schema_validators["envelope.schema.json"].validate(
            envelope("err", {"message": "malformed JSON"})
        )

    def test_arm_model(self, schema_validators):
        schema_validators["arm_model.schema.json"].validate(default_arm().to_dict())


class TestRejection:
    def test_unknown_type(self, schema_validators):
        with pytest.raises(ValidationError):
            schema_validators["envelope.schema.json"].validate(
                {"type": "zzz", "body": {}}
            )

    def test_missing_body(self, schema_validators):
        with pytest.raises(ValidationError):
            schema_validators["envelope.schema.json"].validate({"type": "obs"})

    def test_chunk_out_of_range(self, schema_validators):
        body = chunk_to_body(0, np.zeros((16, 24)), 0)
        body["chunk"][3][5] = 2.5
        with pytest.raises(ValidationError):
            schema_validators["envelope.schema.json"].validate(envelope("chunk", body))

    def test_chunk_wrong_row_count(self, schema_validators):
        body = chunk_to_body(0, np.zeros((16, 24)), 0)
        body["chunk"] = body["chunk"][:8]
        with pytest.raises(ValidationError):
            schema_validators["envelope.schema.json"].validate(envelope("chunk", body))

    def test_controller_state_bad_grip(self, schema_validators):
        v = schema_validators["controller_state.schema.json"]
        good = {
            "pose": [0, 0, 0, 0, 0, 0],
            "grip": 0.5,
            "thumbstick": [0, 0],
            "trigger": False,
        }
        v.validate(good)
        for field, value in (
            ("grip", 1.5),
            ("grip", -0.1),
            ("thumbstick", [2.0, 0.0]),
            ("thumbstick", [0.0]),
            ("pose", [0.0] * 5),
            ("trigger", "yes"),
        ):
            bad = dict(good)
            bad[field] = value
            with pytest.raises(ValidationError):
                v.validate(bad)

    def test_obs_touch_wrong_length(self, schema_validators):
        body = observation_to_body(make_obs(0), seq=0)
        body["touch"] = body["touch"][:59]
        with pytest.raises(ValidationError):
            schema_validators["envelope.schema.json"].validate(envelope("obs", body))

    def test_fuzzed_field_removal(self, schema_validators):
        """Deleting any required field from a valid message must fail
        validation."""
        v = schema_validators["envelope.schema.json"]
        cases = [
            ("obs", observation_to_body(make_obs(1), seq=0),
             ["seq", "timestep", "eef_left", "touch", "images"]),
            ("chunk", chunk_to_body(0, np.zeros((16, 24)), 0),
             ["based_on_timestep", "chunk"]),
            ("ctrl", {"kind": "heartbeat"}, ["kind"]),
            ("err", {"message": "x"}, ["message"]),
        ]
        for msg_type, body, required in cases:
            v.validate(envelope(msg_type, body))
            for field in required:
                mutated = {k: val for k, val in body.items() if k != field}
                with pytest.raises(ValidationError):
                    v.validate(envelope(msg_type, mutated))

    def test_fuzzed_random_type_swaps(self, schema_validators):
        """Random type perturbations of scalar fields must be rejected."""
        v = schema_validators["envelope.schema.json"]
        body = observation_to_body(make_obs(2), seq=3)
        for field in ("seq", "timestep"):
            bad = dict(body)
            bad[field] = "seven"
            with pytest.raises(ValidationError):
                v.validate(envelope("obs", bad))
        bad = dict(body)
        bad["eef_left"] = body["eef_left"] + [0.0]
        with pytest.raises(ValidationError):
            v.validate(envelope("obs", bad))

    def test_arm_model_rejects_missing_limits(self, schema_validators):
        d = default_arm().to_dict()
        del d["limits"]
        with pytest.raises(ValidationError):
            schema_validators["arm_model.schema.json"].validate(d)


class TestSchemasAreValidThemselves:
    def test_metaschema(self, schema_validators):
        from jsonschema import Draft202012Validator

        from conftest import SCHEMA_DIR

        for p in sorted(SCHEMA_DIR.glob("*.schema.json")):
            Draft202012Validator.check_schema(json.loads(p.read_text()))
