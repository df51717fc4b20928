"""Sequential container for spiking layers."""

from __future__ import annotations

import numpy as np
import torch
from torch import nn

from .encoding import SpikeTrain, constant_current
from .layers import MembraneReadout, _SpikingModule


class SpikingSequential(nn.Module):
    """Feedforward chain of spiking layers, optionally ending in a readout.

    Input is either a SpikeTrain or an analog frame (with direct=True the
    frame is repeated as constant drive of the first spiking layer).
    """

    def __init__(self, *layers: nn.Module):
        super().__init__()
        self.layers = nn.ModuleList(layers)

    def set_spike_mode(self, mode: str) -> None:
        for layer in self.layers:
            if isinstance(layer, _SpikingModule):
                layer.spike_mode = mode

    @property
    def dtype(self) -> torch.dtype:
        for p in self.parameters():
            return p.dtype
        return torch.float32

    def encode_direct(self, image: np.ndarray, steps: int, dt: float = 1.0) -> SpikeTrain:
        train = constant_current(image, steps, dt=dt, dtype=self.dtype)
        data = train.data
        if data.dim() == 3:
            data = data.unsqueeze(1).unsqueeze(1)  # [T,H,W] -> [T,1,1,H,W]
        elif data.dim() == 4:
            data = data.unsqueeze(1)
        return SpikeTrain(data, dt=dt)

    def forward(self, train: SpikeTrain):
        out = train
        for layer in self.layers:
            out = layer(out)
        return out

    def readout_size(self) -> int | None:
        last = self.layers[-1]
        return last.out_features if isinstance(last, MembraneReadout) else None
