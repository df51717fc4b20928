"""Wire protocol between the simulator service and teleoperation clients.

JSON text frames over a WebSocket; every message carries the protocol
version and a monotonically increasing tick. Camera frames travel as
base64-encoded binary PGM. The full schema ships in protocol_schema.json.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass
from typing import Any

from ..errors import DomainError

PROTOCOL_VERSION = 1

TELEMETRY_TYPES = ("frame", "state", "force", "mode", "event")
COMMAND_TYPES = ("joystick", "scenario-control", "param-update")

# param-update keys clients may touch; anything else is rejected.
PARAM_WHITELIST = ("beta", "current_enabled", "operator_profile")
SCENARIO_ACTIONS = ("start", "pause", "reset")


def telemetry(msg_type: str, tick: int, payload: dict) -> str:
    if msg_type not in TELEMETRY_TYPES:
        raise DomainError(f"unknown telemetry type {msg_type!r}")
    return json.dumps(
        {"v": PROTOCOL_VERSION, "type": msg_type, "tick": tick, "payload": payload},
        separators=(",", ":"),
    )


def frame_message(tick: int, pgm_bytes: bytes, kind: str = "enhanced") -> str:
    return telemetry(
        "frame",
        tick,
        {"kind": kind, "pgm_base64": base64.b64encode(pgm_bytes).decode("ascii")},
    )


@dataclass
class CommandMessage:
    type: str
    payload: dict[str, Any]

    def to_json(self) -> str:
        return json.dumps(
            {"v": PROTOCOL_VERSION, "type": self.type, "payload": self.payload},
            separators=(",", ":"),
        )


def parse_command(raw: str | bytes, theta_max: float = 0.5) -> CommandMessage:
    """Validate an inbound client message. Raises DomainError on anything
    malformed; the caller answers with an error event and drops it."""
    try:
        data = json.loads(raw)
    except (json.JSONDecodeError, UnicodeDecodeError) as err:
        raise DomainError(f"not valid JSON: {err}") from err
    if not isinstance(data, dict):
        raise DomainError("command must be a JSON object")
    if data.get("v") != PROTOCOL_VERSION:
        raise DomainError(f"unsupported protocol version {data.get('v')!r}")
    msg_type = data.get("type")
    if msg_type not in COMMAND_TYPES:
        raise DomainError(f"unknown command type {msg_type!r}")
    payload = data.get("payload")
    if not isinstance(payload, dict):
        raise DomainError("payload must be an object")

    if msg_type == "joystick":
        theta = payload.get("theta_x")
        if not isinstance(theta, (int, float)):
            raise DomainError("joystick payload needs numeric theta_x")
        if abs(theta) > theta_max + 1e-9:
            raise DomainError(f"theta_x {theta} outside +/-{theta_max}")
    elif msg_type == "scenario-control":
        if payload.get("action") not in SCENARIO_ACTIONS:
            raise DomainError(f"unknown scenario action {payload.get('action')!r}")
    else:  # param-update
        key = payload.get("key")
        if key not in PARAM_WHITELIST:
            raise DomainError(f"parameter {key!r} is not whitelisted")
        if "value" not in payload:
            raise DomainError("param-update needs a value")
    return CommandMessage(type=msg_type, payload=payload)


def decode_frame_payload(payload: dict) -> bytes:
    return base64.b64decode(payload["pgm_base64"])
