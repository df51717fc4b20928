"""Underwater haze: Koschmieder forward model and its analytic inversion.

I = J * exp(-beta * d) + A * (1 - exp(-beta * d))

The enhancement module inverts this with the configured attenuation and a
range estimate; airlight is taken from the parameters when known, else
estimated as the 99th-percentile intensity of the hazy frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DomainError, SaturationError
from .frame import Frame

MIN_TRANSMISSION = 1e-3


@dataclass(frozen=True)
class HazeParams:
    """Attenuation beta (1/m) and ambient airlight intensity in [0, 1].

    airlight=None means "estimate from the frame".
    """

    beta: float = 0.3
    airlight: float | None = 0.7

    def __post_init__(self):
        if self.beta < 0:
            raise DomainError("beta must be non-negative")
        if self.airlight is not None and not 0.0 <= self.airlight <= 1.0:
            raise DomainError("airlight must lie in [0, 1]")


def apply_haze(frame: Frame, params: HazeParams, depth) -> Frame:
    """Forward model; depth is a scalar range or a per-pixel map (m)."""
    if params.airlight is None:
        raise DomainError("apply_haze needs an explicit airlight")
    d = np.asarray(depth, dtype=float)
    if np.any(d < 0):
        raise DomainError("depth must be non-negative")
    t = np.exp(-params.beta * d)
    hazy = frame.pixels * t + params.airlight * (1.0 - t)
    return Frame(pixels=np.clip(hazy, 0.0, 1.0), timestamp=frame.timestamp)


def estimate_airlight(frame: Frame) -> float:
    """99th-percentile intensity: haze-dominated pixels approach A."""
    return float(np.percentile(frame.pixels, 99.0))


def enhance(hazy: Frame, params_estimate: HazeParams, range_estimate: float) -> Frame:
    """Invert the forward model with a single range estimate.

    Raises SaturationError when the transmission is too low to recover
    anything (the scene is washed out beyond inversion).
    """
    if range_estimate <= 0:
        raise DomainError("range estimate must be positive")
    t = float(np.exp(-params_estimate.beta * range_estimate))
    if t < MIN_TRANSMISSION:
        raise SaturationError(
            f"transmission {t:.2e} below {MIN_TRANSMISSION}; scene irrecoverable"
        )
    airlight = (
        params_estimate.airlight
        if params_estimate.airlight is not None
        else estimate_airlight(hazy)
    )
    restored = (hazy.pixels - airlight * (1.0 - t)) / t
    return Frame(pixels=np.clip(restored, 0.0, 1.0), timestamp=hazy.timestamp)
