"""CLI, configuration and the telemetry/command service."""

from .config import Config, setup_logging
from .protocol import (
    PROTOCOL_VERSION,
    CommandMessage,
    frame_message,
    parse_command,
    telemetry,
)

__all__ = [
    "Config",
    "setup_logging",
    "PROTOCOL_VERSION",
    "CommandMessage",
    "frame_message",
    "parse_command",
    "telemetry",
]
