"""Threshold spike function with a boxcar pseudo-derivative.

The forward pass is a hard step (spike when the membrane potential reaches
threshold). Because the step has no usable derivative, the backward pass
substitutes a boxcar window around the threshold; everything else in the
network follows the exact chain rule.

For gradient checking there is a "smooth" mode in which the forward pass is
the piecewise-linear ramp whose exact derivative *is* the boxcar. Running
the whole network in smooth mode yields a computation that finite
differences can verify.
"""

from __future__ import annotations

from dataclasses import dataclass

import torch


@dataclass(frozen=True)
class SurrogateConfig:
    """Boxcar pseudo-derivative: dS/dv = scale inside |v - v_th| < window."""

    window: float
    scale: float

    def __post_init__(self):
        if self.window <= 0:
            raise ValueError("surrogate window must be positive")

    @classmethod
    def for_threshold(cls, v_th: float) -> "SurrogateConfig":
        # window = v_th / 2 with unit total mass keeps the pseudo-derivative
        # bounded and centred on the threshold.
        w = 0.5 * v_th
        return cls(window=w, scale=1.0 / (2.0 * w))


class _BoxcarSpike(torch.autograd.Function):
    @staticmethod
    def forward(ctx, x: torch.Tensor, window: float, scale: float) -> torch.Tensor:
        ctx.save_for_backward(x)
        ctx.window = window
        ctx.scale = scale
        return (x >= 0).to(x.dtype)

    @staticmethod
    def backward(ctx, grad_output):
        (x,) = ctx.saved_tensors
        inside = (x.abs() < ctx.window).to(x.dtype)
        return grad_output * ctx.scale * inside, None, None


def spike_fn(
    x: torch.Tensor, config: SurrogateConfig, mode: str = "hard"
) -> torch.Tensor:
    """Spike nonlinearity on x = v - v_th.

    mode "hard": Heaviside forward, boxcar backward (training/inference).
    mode "smooth": ramp forward whose true derivative equals the boxcar,
    so autograd and finite differences agree (gradient-check mode).
    """
    if mode == "hard":
        return _BoxcarSpike.apply(x, config.window, config.scale)
    if mode == "smooth":
        return torch.clamp((x + config.window) * config.scale, 0.0, 1.0)
    raise ValueError(f"unknown spike mode {mode!r}")
