"""Target detection: spiking detector network plus a classical fallback.

Both return a bounding box in pixel coordinates; the centroid handed to the
haptics/control stack is the box centre. A small tracker holds the last box
over short dropouts and reports detection-lost beyond that.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch
from scipy import ndimage

from ..errors import ConfigurationError, DomainError
from ..snn import (
    FlattenSpace,
    LifParams,
    MembraneReadout,
    SpikeTrain,
    SpikingConv2d,
    SpikingDense,
    SpikingSequential,
)
from ..snn.checkpoint import load_manifest, load_sequential, save_sequential
from .frame import Frame


@dataclass
class BoundingBox:
    """Centre (cx, cy) and extent (w, h), pixels."""

    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise DomainError("box extent must be positive")

    def clamped(self, width: int, height: int) -> "BoundingBox":
        w = min(self.w, width)
        h = min(self.h, height)
        cx = min(max(self.cx, w / 2), width - w / 2)
        cy = min(max(self.cy, h / 2), height - h / 2)
        return BoundingBox(cx, cy, w, h)


@dataclass
class Centroid:
    x_l: float
    y_l: float


def centroid(box: BoundingBox, width: int | None = None, height: int | None = None) -> Centroid:
    """Box centre, clamped inside the frame when bounds are given."""
    x, y = box.cx, box.cy
    if width is not None:
        x = min(max(x, 0.0), width - 1.0)
    if height is not None:
        y = min(max(y, 0.0), height - 1.0)
    return Centroid(x_l=x, y_l=y)


def classical_detect(
    frame: Frame, threshold: float = 0.45, min_pixels: int = 4
) -> BoundingBox | None:
    """Connected components of the intensity-thresholded frame; the largest
    blob becomes the box. None when nothing clears the threshold."""
    mask = frame.pixels >= threshold
    labels, count = ndimage.label(mask)
    if count == 0:
        return None
    sizes = ndimage.sum_labels(np.ones_like(labels), labels, index=range(1, count + 1))
    best = int(np.argmax(sizes)) + 1
    if sizes[best - 1] < min_pixels:
        return None
    rows, cols = np.nonzero(labels == best)
    # Pixel (r, c) covers [c, c+1) x [r, r+1); report the continuous extent.
    cx = (cols.min() + cols.max() + 1) / 2.0
    cy = (rows.min() + rows.max() + 1) / 2.0
    w = float(cols.max() - cols.min() + 1)
    h = float(rows.max() - rows.min() + 1)
    return BoundingBox(cx, cy, w, h).clamped(frame.width, frame.height)


@dataclass
class TrackedDetection:
    box: BoundingBox | None
    stale: bool
    lost: bool


class DetectionTracker:
    """Hold the last seen box for up to max_stale blank frames, then report
    detection-lost (the controller freezes translation commands)."""

    def __init__(self, max_stale: int = 10):
        self.max_stale = max_stale
        self._last: BoundingBox | None = None
        self._misses = 0

    def update(self, box: BoundingBox | None) -> TrackedDetection:
        if box is not None:
            self._last = box
            self._misses = 0
            return TrackedDetection(box=box, stale=False, lost=False)
        self._misses += 1
        if self._last is None or self._misses > self.max_stale:
            return TrackedDetection(box=None, stale=True, lost=True)
        return TrackedDetection(box=self._last, stale=True, lost=False)

    def reset(self) -> None:
        self._last = None
        self._misses = 0


def build_detector_net(
    width: int = 64,
    height: int = 48,
    *,
    lif: LifParams | None = None,
    channels: tuple[int, int, int] = (8, 16, 16),
    dtype=torch.float32,
) -> SpikingSequential:
    """3 spiking conv layers (stride 2) + 2 spiking dense + 4-readout head.

    Init gains overdrive the short direct-coded horizon so every layer fires
    from the start (dead layers pass no surrogate gradient).
    """
    lif = lif or LifParams()
    c1, c2, c3 = channels
    w3, h3 = width // 8, height // 8
    return SpikingSequential(
        SpikingConv2d(1, c1, 3, stride=2, padding=1, lif=lif, gain=6.0, dtype=dtype),
        SpikingConv2d(c1, c2, 3, stride=2, padding=1, lif=lif, gain=6.0, dtype=dtype),
        SpikingConv2d(c2, c3, 3, stride=2, padding=1, lif=lif, gain=6.0, dtype=dtype),
        FlattenSpace(),
        SpikingDense(c3 * w3 * h3, 128, lif, gain=4.0, dtype=dtype),
        SpikingDense(128, 64, lif, gain=4.0, dtype=dtype),
        MembraneReadout(64, 4, lif, dtype=dtype),
    )


class SnnDetector:
    """Spiking conv detector regressing (cx, cy, w, h) from a direct-encoded
    frame through membrane readouts."""

    def __init__(
        self,
        network: SpikingSequential | None = None,
        *,
        width: int = 64,
        height: int = 48,
        steps: int = 6,
    ):
        self.network = network
        self.width = width
        self.height = height
        self.steps = steps

    @classmethod
    def from_checkpoint(cls, directory) -> "SnnDetector":
        manifest = load_manifest(directory)
        hp = manifest.get("hyperparameters", {})
        net = load_sequential(directory)
        return cls(
            net,
            width=hp.get("width", 64),
            height=hp.get("height", 48),
            steps=hp.get("steps", 6),
        )

    def save(self, directory, seed: int | None = None):
        if self.network is None:
            raise ConfigurationError("no detector network to save")
        return save_sequential(
            self.network,
            directory,
            hyperparameters={
                "task": "detector",
                "width": self.width,
                "height": self.height,
                "steps": self.steps,
            },
            seed=seed,
        )

    def _target_scale(self) -> np.ndarray:
        return np.array([self.width, self.height, self.width, self.height], dtype=float)

    def detect(self, frame: Frame) -> BoundingBox:
        if self.network is None:
            raise ConfigurationError("detector network not loaded")
        if (frame.height, frame.width) != (self.height, self.width):
            raise DomainError(
                f"detector expects {self.width}x{self.height} frames, "
                f"got {frame.width}x{frame.height}"
            )
        with torch.no_grad():
            train = self.network.encode_direct(frame.pixels, self.steps)
            out = self.network(train).numpy().ravel()
        cx, cy, w, h = out * self._target_scale()
        w = max(w, 2.0)
        h = max(h, 2.0)
        return BoundingBox(cx, cy, w, h).clamped(frame.width, frame.height)

    def train(
        self,
        frames: list[np.ndarray],
        boxes: list[BoundingBox],
        *,
        epochs: int = 30,
        batch_size: int = 16,
        lr: float = 1e-3,
        seed: int = 0,
    ) -> list[float]:
        """Surrogate-BPTT regression of normalized box parameters."""
        torch.manual_seed(seed)
        if self.network is None:
            self.network = build_detector_net(self.width, self.height)
        net = self.network
        scale = self._target_scale()
        x = torch.stack(
            [torch.as_tensor(f, dtype=torch.float32) for f in frames]
        ).unsqueeze(1)
        y = torch.tensor(
            [[b.cx, b.cy, b.w, b.h] for b in boxes], dtype=torch.float32
        ) / torch.as_tensor(scale, dtype=torch.float32)
        opt = torch.optim.Adam(net.parameters(), lr=lr)
        n = x.shape[0]
        losses = []
        g = torch.Generator().manual_seed(seed)
        for _ in range(epochs):
            order = torch.randperm(n, generator=g)
            epoch_loss = 0.0
            for start in range(0, n, batch_size):
                idx = order[start : start + batch_size]
                batch = x[idx]  # [B,1,H,W]
                train = batch.unsqueeze(0).expand(self.steps, *batch.shape)
                out = net(SpikeTrain(train.contiguous()))
                loss = ((out - y[idx]) ** 2).mean()
                opt.zero_grad()
                loss.backward()
                opt.step()
                epoch_loss += float(loss.detach()) * len(idx)
            losses.append(epoch_loss / n)
        return losses
