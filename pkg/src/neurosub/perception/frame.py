"""Grayscale camera frames and 8-bit PGM persistence."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import DomainError


@dataclass
class Frame:
    """H x W grayscale intensities in [0, 1] plus a capture timestamp (s)."""

    pixels: np.ndarray
    timestamp: float = 0.0

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=float)
        if self.pixels.ndim != 2:
            raise DomainError("frame must be a 2-D intensity array")
        if self.pixels.min() < -1e-9 or self.pixels.max() > 1.0 + 1e-9:
            raise DomainError("frame intensities must lie in [0, 1]")
        self.pixels = np.clip(self.pixels, 0.0, 1.0)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


def write_pgm(frame: Frame, path: str | Path) -> Path:
    """Binary 8-bit PGM (P5)."""
    path = Path(path)
    data = np.round(frame.pixels * 255.0).astype(np.uint8)
    header = f"P5\n{data.shape[1]} {data.shape[0]}\n255\n".encode("ascii")
    path.write_bytes(header + data.tobytes())
    return path


def read_pgm(path: str | Path, timestamp: float = 0.0) -> Frame:
    raw = Path(path).read_bytes()
    return Frame(pixels=decode_pgm_bytes(raw), timestamp=timestamp)


def decode_pgm_bytes(raw: bytes) -> np.ndarray:
    """Parse a binary P5 PGM payload into a float intensity array."""
    if not raw.startswith(b"P5"):
        raise DomainError("not a binary PGM (P5) payload")
    # Header: magic, width, height, maxval; comments allowed between tokens.
    tokens: list[bytes] = []
    pos = 2
    while len(tokens) < 3:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if raw[pos : pos + 1] == b"#":
            while pos < len(raw) and raw[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        tokens.append(raw[start:pos])
    pos += 1  # single whitespace after maxval
    width, height, maxval = (int(t) for t in tokens)
    if maxval != 255:
        raise DomainError(f"expected 8-bit PGM, got maxval {maxval}")
    data = np.frombuffer(raw, dtype=np.uint8, count=width * height, offset=pos)
    return data.reshape(height, width).astype(float) / 255.0
