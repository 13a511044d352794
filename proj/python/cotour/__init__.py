"""Python access to the session core: codec, frame math, layout, sessions, scenarios."""

import json as _json

from . import _core
from ._core import DocumentError, Rejected, ReplayError, message_types, radial_button_layout

__all__ = [
    "DocumentError",
    "Rejected",
    "ReplayError",
    "Session",
    "canonical_hash",
    "compose",
    "decode",
    "encode",
    "map_hub_position",
    "message_types",
    "radial_button_layout",
    "replay",
    "run_scenario",
    "to_local",
]


def _dump(value):
    return value if isinstance(value, str) else _json.dumps(value)


def encode(message):
    return _core.encode(_dump(message))


def decode(wire):
    return _json.loads(_core.decode(wire))


def canonical_hash(snapshot):
    return _core.canonical_hash(_dump(snapshot))


def compose(parent, child):
    return _json.loads(_core.compose(_dump(parent), _dump(child)))


def to_local(world, parent):
    return _json.loads(_core.to_local(_dump(world), _dump(parent)))


def map_hub_position(world, position):
    return list(_core.map_hub_position(_dump(world), list(position)))


def run_scenario(path):
    return _json.loads(_core.run_scenario_file(str(path)))


def replay(log_text):
    return _json.loads(_core.replay_text(log_text))


class Session:
    def __init__(self, world, config=None):
        self._s = _core.Session(_dump(world), _dump(config or {}))

    def join(self, role, seq=0):
        return self._s.join(role, seq)

    def leave(self, client):
        self._s.leave(client)

    def handle(self, sender, message):
        self._s.handle(sender, _dump(message))

    def tick(self, dt):
        self._s.tick(dt)

    def snapshot(self):
        return _json.loads(self._s.snapshot())

    def take_outbox(self):
        return _json.loads(self._s.take_outbox())

    def check_invariants(self):
        return self._s.check_invariants()

    @property
    def time(self):
        return self._s.time
