"""Spike trains and analog-to-spike encoders (rate, time-to-first-spike)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import torch

from ..errors import DomainError


@dataclass
class SpikeTrain:
    """Binary tensor over (time step, neuron layout) plus the step size (ms).

    Entries are {0,1}, or {-1,0,1} for signed trains.
    """

    data: torch.Tensor
    dt: float = 1.0

    def __post_init__(self):
        if self.data.shape[0] < 1:
            raise DomainError("spike train needs at least one time step")

    @property
    def steps(self) -> int:
        return int(self.data.shape[0])

    def rate(self) -> torch.Tensor:
        """Mean spikes per step, per neuron."""
        return self.data.mean(dim=0)

    def count(self) -> torch.Tensor:
        return self.data.sum(dim=0)


def _check_intensities(image: np.ndarray) -> np.ndarray:
    arr = np.asarray(image, dtype=np.float64)
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise DomainError("intensities must lie in [0, 1]")
    return arr


def poisson_encode(
    image: np.ndarray,
    max_rate: float,
    steps: int,
    seed: int,
    dt: float = 1.0,
) -> SpikeTrain:
    """Bernoulli rate coding: each pixel fires i.i.d. per step with
    probability intensity * max_rate. Deterministic for a given seed."""
    arr = _check_intensities(image)
    if not 0.0 < max_rate <= 1.0:
        raise DomainError("max_rate must lie in (0, 1]")
    if steps < 1:
        raise DomainError("steps must be >= 1")
    rng = np.random.default_rng(seed)
    p = arr * max_rate
    draws = rng.random((steps, *arr.shape))
    spikes = (draws < p).astype(np.float32)
    return SpikeTrain(data=torch.from_numpy(spikes), dt=dt)


def ttfs_encode(image: np.ndarray, steps: int, dt: float = 1.0) -> SpikeTrain:
    """Time-to-first-spike: intensity p > 0 spikes once at
    round((1 - p) * (steps - 1)); zero intensity stays silent."""
    arr = _check_intensities(image)
    if steps < 2:
        raise DomainError("TTFS needs at least 2 steps")
    out = np.zeros((steps, *arr.shape), dtype=np.float32)
    active = arr > 0.0
    fire_at = np.rint((1.0 - arr) * (steps - 1)).astype(np.int64)
    idx = np.nonzero(active)
    out[(fire_at[idx], *idx)] = 1.0
    return SpikeTrain(data=torch.from_numpy(out), dt=dt)


def constant_current(
    image: np.ndarray, steps: int, dt: float = 1.0, dtype=torch.float32
) -> SpikeTrain:
    """Direct coding helper: the analog image repeated as the per-step drive
    of a first spiking layer (which does the actual conversion to spikes)."""
    arr = np.asarray(image, dtype=np.float64)
    t = torch.as_tensor(arr, dtype=dtype).unsqueeze(0).expand(steps, *arr.shape)
    return SpikeTrain(data=t.contiguous(), dt=dt)
