"""Leaky integrate-and-fire dynamics (forward Euler) and the signed variant.

The membrane recurrence is

    v' = v + (dt / tau_m) * (-v + I)

per neuron; a neuron whose updated potential reaches threshold emits a spike
and resets to zero. Sub-threshold potential is carried over to the next step
unchanged (residual-potential semantics).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import torch

from ..errors import DimensionError, NumericError
from .surrogate import SurrogateConfig, spike_fn


@dataclass(frozen=True)
class LifParams:
    """Membrane constants: tau_m and dt in ms, v_th dimensionless."""

    tau_m: float = 20.0
    v_th: float = 1.0
    dt: float = 1.0
    v_reset: float = field(default=0.0, init=False)  # reset-to-zero semantics

    def __post_init__(self):
        if self.tau_m <= 0 or self.v_th <= 0 or self.dt <= 0:
            raise ValueError("tau_m, v_th and dt must all be positive")
        if self.dt > self.tau_m / 10.0 + 1e-12:
            raise ValueError(
                f"dt={self.dt} too coarse for tau_m={self.tau_m}; need dt <= tau_m/10"
            )

    @property
    def leak(self) -> float:
        return self.dt / self.tau_m


@dataclass
class LifState:
    """Per-neuron membrane potential."""

    v_m: torch.Tensor

    @classmethod
    def zeros(cls, *shape: int, dtype=torch.float32) -> "LifState":
        return cls(v_m=torch.zeros(*shape, dtype=dtype))


@dataclass(frozen=True)
class SignedNeuronParams:
    """Signed spiking unit with imbalanced thresholds.

    Positive activations fire +1 at v_th_pos; negative activations fire -1 at
    -v_th_neg where v_th_neg = v_th_pos / alpha, so the negative firing rate
    approximates a leaky slope of alpha.
    """

    v_th_pos: float = 1.0
    alpha: float = 0.1

    def __post_init__(self):
        if self.v_th_pos <= 0:
            raise ValueError("v_th_pos must be positive")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")

    @property
    def v_th_neg(self) -> float:
        return self.v_th_pos / self.alpha


def _check_input(state: LifState, current: torch.Tensor) -> torch.Tensor:
    if not isinstance(current, torch.Tensor):
        current = torch.as_tensor(current, dtype=state.v_m.dtype)
    if current.shape != state.v_m.shape:
        raise DimensionError(
            f"input current shape {tuple(current.shape)} != state shape {tuple(state.v_m.shape)}"
        )
    if not torch.isfinite(current).all():
        raise NumericError("non-finite input current")
    return current


def lif_step(
    state: LifState,
    params: LifParams,
    input_current: torch.Tensor,
    *,
    surrogate: SurrogateConfig | None = None,
    mode: str = "hard",
) -> tuple[LifState, torch.Tensor]:
    """One Euler step; returns (new state, spike tensor in {0,1})."""
    current = _check_input(state, input_current)
    v = state.v_m + params.leak * (-state.v_m + current)
    cfg = surrogate or SurrogateConfig.for_threshold(params.v_th)
    spikes = spike_fn(v - params.v_th, cfg, mode)
    v_next = v * (1.0 - spikes)  # reset-to-zero on spike
    return LifState(v_m=v_next), spikes


def lif_readout_step(
    state: LifState, params: LifParams, input_current: torch.Tensor
) -> LifState:
    """Non-spiking integration: same leak, never resets."""
    current = _check_input(state, input_current)
    return LifState(v_m=state.v_m + params.leak * (-state.v_m + current))


def membrane_readout(state: LifState) -> torch.Tensor:
    """Accumulated potential of non-spiking output neurons, unchanged."""
    return state.v_m


def signed_lif_step(
    state: LifState,
    params: LifParams,
    signed: SignedNeuronParams,
    input_current: torch.Tensor,
) -> tuple[LifState, torch.Tensor]:
    """LIF step emitting spikes in {-1, 0, +1} with imbalanced thresholds."""
    current = _check_input(state, input_current)
    v = state.v_m + params.leak * (-state.v_m + current)
    pos = (v >= signed.v_th_pos).to(v.dtype)
    neg = (v <= -signed.v_th_neg).to(v.dtype)
    spikes = pos - neg
    v_next = v * (1.0 - pos) * (1.0 - neg)
    return LifState(v_m=v_next), spikes
