from .ensemble import ActionChunkMsg, EnsembleBuffer, Hold
from .mailbox import LatestMailbox
from .harness import LoopbackHarness, run_deployment
from .protocol import decode_message, encode_message, observation_to_body, body_to_observation

__all__ = [
    "ActionChunkMsg",
    "EnsembleBuffer",
    "Hold",
    "LatestMailbox",
    "LoopbackHarness",
    "body_to_observation",
    "decode_message",
    "encode_message",
    "observation_to_body",
    "run_deployment",
]
