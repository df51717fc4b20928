"""Spiking layers operating on [T, B, ...] tensors.

Feedforward layers consume the whole train of their input layer: state is
created fresh per call and folded over the T axis internally, so a call is a
pure function of its inputs and parameters (no carry-over between samples).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
import torch.nn.functional as F
from torch import nn

from ..errors import DimensionError
from .encoding import SpikeTrain
from .neuron import (
    LifParams,
    LifState,
    SignedNeuronParams,
    lif_readout_step,
    lif_step,
    signed_lif_step,
)
from .surrogate import SurrogateConfig, spike_fn


@dataclass
class SynapseWeights:
    """Dense matrix or conv kernel plus bias."""

    weights: torch.Tensor
    bias: torch.Tensor | None = None

    def __post_init__(self):
        if not torch.isfinite(self.weights).all():
            raise ValueError("non-finite synapse weights")
        if self.bias is not None and not torch.isfinite(self.bias).all():
            raise ValueError("non-finite synapse bias")


def init_scale(fan_in: int, fan_out: int, params: LifParams, gain: float = 1.0) -> float:
    """Uniform bound sqrt(6/(fan_in+fan_out)) rescaled by (tau_m/dt)/v_th so
    per-step drive lands near threshold and initial firing is non-degenerate.
    gain > 1 overdrives layers that must fire within a short horizon."""
    return (
        gain
        * math.sqrt(6.0 / (fan_in + fan_out))
        * (params.tau_m / params.dt)
        / params.v_th
    )


def conv_spiking_forward(
    spikes_in: SpikeTrain,
    kernel: SynapseWeights,
    state: LifState,
    params: LifParams,
    *,
    stride: int = 1,
    padding: int = 0,
    surrogate: SurrogateConfig | None = None,
    mode: str = "hard",
) -> tuple[SpikeTrain, LifState]:
    """Per step: current = conv2d(input plane, kernel); LIF integrate/fire.

    Input layout [T, B, C, H, W].
    """
    x = spikes_in.data
    if x.dim() != 5:
        raise DimensionError(f"expected [T,B,C,H,W] input, got {tuple(x.shape)}")
    outputs = []
    for t in range(x.shape[0]):
        current = F.conv2d(x[t], kernel.weights, kernel.bias, stride=stride, padding=padding)
        state, spikes = lif_step(state, params, current, surrogate=surrogate, mode=mode)
        outputs.append(spikes)
    return SpikeTrain(torch.stack(outputs), dt=spikes_in.dt), state


def pool_spiking(spikes_in: SpikeTrain, window: int) -> SpikeTrain:
    """Average-pool per-step currents (not binary spikes), preserving rate.

    Output entries are fractional currents; downstream layers integrate them
    like any other drive.
    """
    x = spikes_in.data
    if x.dim() != 5:
        raise DimensionError(f"expected [T,B,C,H,W] input, got {tuple(x.shape)}")
    h, w = x.shape[-2], x.shape[-1]
    if h % window or w % window:
        raise DimensionError(f"window {window} does not divide spatial dims {(h, w)}")
    t, b = x.shape[0], x.shape[1]
    pooled = F.avg_pool2d(x.reshape(t * b, *x.shape[2:]), window)
    return SpikeTrain(pooled.reshape(t, b, *pooled.shape[1:]), dt=spikes_in.dt)


class _SpikingModule(nn.Module):
    """Shared spike-mode plumbing (hard for runs, smooth for grad checks)."""

    def __init__(self, lif: LifParams, surrogate: SurrogateConfig | None = None):
        super().__init__()
        self.lif = lif
        self.surrogate = surrogate or SurrogateConfig.for_threshold(lif.v_th)
        self.spike_mode = "hard"


class SpikingDense(_SpikingModule):
    def __init__(
        self,
        in_features: int,
        out_features: int,
        lif: LifParams | None = None,
        *,
        gain: float = 1.0,
        dtype=torch.float32,
    ):
        lif = lif or LifParams()
        super().__init__(lif)
        self.in_features = in_features
        self.out_features = out_features
        bound = init_scale(in_features, out_features, lif, gain)
        self.weight = nn.Parameter(
            torch.empty(out_features, in_features, dtype=dtype).uniform_(-bound, bound)
        )
        self.bias = nn.Parameter(torch.zeros(out_features, dtype=dtype))

    def forward(self, train: SpikeTrain) -> SpikeTrain:
        x = train.data
        if x.dim() != 3 or x.shape[-1] != self.in_features:
            raise DimensionError(
                f"expected [T,B,{self.in_features}] input, got {tuple(x.shape)}"
            )
        state = LifState(torch.zeros(x.shape[1], self.out_features, dtype=x.dtype))
        outputs = []
        for t in range(x.shape[0]):
            current = F.linear(x[t], self.weight, self.bias)
            state, spikes = lif_step(
                state, self.lif, current, surrogate=self.surrogate, mode=self.spike_mode
            )
            outputs.append(spikes)
        return SpikeTrain(torch.stack(outputs), dt=train.dt)


class SpikingConv2d(_SpikingModule):
    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        *,
        stride: int = 1,
        padding: int = 0,
        lif: LifParams | None = None,
        gain: float = 1.0,
        dtype=torch.float32,
    ):
        lif = lif or LifParams()
        super().__init__(lif)
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = kernel_size
        self.stride = stride
        self.padding = padding
        k2 = kernel_size * kernel_size
        bound = init_scale(in_channels * k2, out_channels * k2, lif, gain)
        self.weight = nn.Parameter(
            torch.empty(
                out_channels, in_channels, kernel_size, kernel_size, dtype=dtype
            ).uniform_(-bound, bound)
        )
        self.bias = nn.Parameter(torch.zeros(out_channels, dtype=dtype))

    def forward(self, train: SpikeTrain) -> SpikeTrain:
        x = train.data
        if x.dim() != 5 or x.shape[2] != self.in_channels:
            raise DimensionError(
                f"expected [T,B,{self.in_channels},H,W] input, got {tuple(x.shape)}"
            )
        with torch.no_grad():
            probe = F.conv2d(
                x[0], self.weight, None, stride=self.stride, padding=self.padding
            )
        state = LifState(torch.zeros_like(probe))
        kernel = SynapseWeights(self.weight, self.bias)
        out, _ = conv_spiking_forward(
            train,
            kernel,
            state,
            self.lif,
            stride=self.stride,
            padding=self.padding,
            surrogate=self.surrogate,
            mode=self.spike_mode,
        )
        return out


class CurrentAvgPool(nn.Module):
    """Average pooling over per-step currents (rate-preserving)."""

    def __init__(self, window: int):
        super().__init__()
        self.window = window

    def forward(self, train: SpikeTrain) -> SpikeTrain:
        return pool_spiking(train, self.window)


class FlattenSpace(nn.Module):
    """[T, B, C, H, W] -> [T, B, C*H*W]."""

    def forward(self, train: SpikeTrain) -> SpikeTrain:
        x = train.data
        return SpikeTrain(x.reshape(x.shape[0], x.shape[1], -1), dt=train.dt)


class MembraneReadout(nn.Module):
    """Dense projection into non-spiking neurons; the output is the membrane
    potential accumulated over all steps (never reset)."""

    def __init__(
        self,
        in_features: int,
        out_features: int,
        lif: LifParams | None = None,
        *,
        dtype=torch.float32,
    ):
        super().__init__()
        self.lif = lif or LifParams()
        self.in_features = in_features
        self.out_features = out_features
        # Plain Xavier: readouts have no threshold to reach, and their fixed
        # point tracks the raw input current.
        bound = math.sqrt(6.0 / (in_features + out_features))
        self.weight = nn.Parameter(
            torch.empty(out_features, in_features, dtype=dtype).uniform_(-bound, bound)
        )
        self.bias = nn.Parameter(torch.zeros(out_features, dtype=dtype))

    def forward(self, train: SpikeTrain) -> torch.Tensor:
        x = train.data
        if x.dim() != 3 or x.shape[-1] != self.in_features:
            raise DimensionError(
                f"expected [T,B,{self.in_features}] input, got {tuple(x.shape)}"
            )
        state = LifState(torch.zeros(x.shape[1], self.out_features, dtype=x.dtype))
        for t in range(x.shape[0]):
            current = F.linear(x[t], self.weight, self.bias)
            state = lif_readout_step(state, self.lif, current)
        return state.v_m


class SignedSpikingConv2d(nn.Module):
    """Conv layer of signed IF/LIF units (inference only; used by ANN->SNN
    converted networks)."""

    def __init__(
        self,
        weight: torch.Tensor,
        bias: torch.Tensor,
        signed: SignedNeuronParams,
        lif: LifParams,
        *,
        stride: int = 1,
        padding: int = 0,
    ):
        super().__init__()
        self.register_buffer("weight", weight)
        self.register_buffer("bias", bias)
        self.signed = signed
        self.lif = lif
        self.stride = stride
        self.padding = padding

    @torch.no_grad()
    def forward(self, train: SpikeTrain) -> SpikeTrain:
        x = train.data
        outputs = []
        state = None
        for t in range(x.shape[0]):
            current = F.conv2d(
                x[t], self.weight, self.bias, stride=self.stride, padding=self.padding
            )
            if state is None:
                state = LifState(torch.zeros_like(current))
            state, spikes = signed_lif_step(state, self.lif, self.signed, current)
            outputs.append(spikes)
        return SpikeTrain(torch.stack(outputs), dt=train.dt)


def direct_encode_layer(
    image, layer: SpikingConv2d, steps: int, dt: float = 1.0
) -> SpikeTrain:
    """Direct (adaptive) coding: the analog image drives the first spiking
    conv layer as a constant current; the layer's spikes are the code."""
    from .encoding import constant_current

    arr = constant_current(image, steps, dt=dt, dtype=layer.weight.dtype)
    data = arr.data
    if data.dim() == 3:  # [T, H, W] -> [T, 1, 1, H, W]
        data = data.unsqueeze(1).unsqueeze(1)
    elif data.dim() == 4:  # [T, C, H, W] -> [T, 1, C, H, W]
        data = data.unsqueeze(1)
    return layer(SpikeTrain(data, dt=dt))
