"""Spiking LSTM cell.

Gate pre-activations are the gate neurons' membrane potentials; the gate
spike functions threshold them to {0,1} each step. The cell state is
real-valued (sums of binary products) and h_t = o_t * c_t is treated by
downstream layers as input current. Both spike functions are Heaviside
thresholds with learnable levels; the candidate-path threshold starts lower
so g_t fires more readily.
"""

from __future__ import annotations

import math

import torch
from torch import nn

from ..errors import DimensionError, DomainError
from ..snn.surrogate import SurrogateConfig, spike_fn

GATES = ("f", "i", "g", "o")


class SpikingLstmCell(nn.Module):
    def __init__(
        self,
        input_size: int,
        hidden_size: int,
        *,
        theta1: float = 0.5,
        theta2: float = 0.25,
        gain: float = 1.0,
        dtype=torch.float32,
    ):
        super().__init__()
        self.input_size = input_size
        self.hidden_size = hidden_size
        self.spike_mode = "hard"
        self.surrogate = SurrogateConfig(window=0.5, scale=1.0)
        bound_h = gain * math.sqrt(6.0 / (2 * hidden_size))
        bound_x = gain * math.sqrt(6.0 / (input_size + hidden_size))
        # Forget and output gates start biased open (pre-activation past the
        # threshold) so the cell state integrates from step one; a closed
        # gate passes no state and learns only through the surrogate window.
        open_bias = {"f": theta1 + 0.3, "o": theta1 + 0.3, "i": 0.0, "g": 0.0}
        for gate in GATES:
            # Dual biases kept separate as written (hidden- and input-side).
            self.register_parameter(
                f"w_h_{gate}",
                nn.Parameter(
                    torch.empty(hidden_size, hidden_size, dtype=dtype).uniform_(
                        -bound_h, bound_h
                    )
                ),
            )
            self.register_parameter(
                f"w_x_{gate}",
                nn.Parameter(
                    torch.empty(hidden_size, input_size, dtype=dtype).uniform_(
                        -bound_x, bound_x
                    )
                ),
            )
            self.register_parameter(
                f"b_h_{gate}",
                nn.Parameter(
                    torch.full((hidden_size,), open_bias[gate], dtype=dtype)
                ),
            )
            self.register_parameter(
                f"b_x_{gate}", nn.Parameter(torch.zeros(hidden_size, dtype=dtype))
            )
        # sigma_1 gates (f, i, o) share one learnable threshold; sigma_2 (g)
        # has its own, initialised lower.
        self.theta1 = nn.Parameter(torch.tensor(theta1, dtype=dtype))
        self.theta2 = nn.Parameter(torch.tensor(theta2, dtype=dtype))

    def zero_state(self, batch: int, dtype=None) -> tuple[torch.Tensor, torch.Tensor]:
        dtype = dtype or self.theta1.dtype
        c = torch.zeros(batch, self.hidden_size, dtype=dtype)
        h = torch.zeros(batch, self.hidden_size, dtype=dtype)
        return c, h

    def _gate(self, name: str, x: torch.Tensor, h: torch.Tensor, theta) -> torch.Tensor:
        pre = (
            h @ getattr(self, f"w_h_{name}").T
            + x @ getattr(self, f"w_x_{name}").T
            + getattr(self, f"b_h_{name}")
            + getattr(self, f"b_x_{name}")
        )
        return spike_fn(pre - theta, self.surrogate, self.spike_mode)

    def step(
        self, x_t: torch.Tensor, state: tuple[torch.Tensor, torch.Tensor]
    ) -> tuple[tuple[torch.Tensor, torch.Tensor], torch.Tensor]:
        c_prev, h_prev = state
        if x_t.shape[-1] != self.input_size:
            raise DimensionError(
                f"expected input size {self.input_size}, got {x_t.shape[-1]}"
            )
        f_t = self._gate("f", x_t, h_prev, self.theta1)
        i_t = self._gate("i", x_t, h_prev, self.theta1)
        g_t = self._gate("g", x_t, h_prev, self.theta2)
        o_t = self._gate("o", x_t, h_prev, self.theta1)
        c_t = f_t * c_prev + i_t * g_t
        h_t = o_t * c_t
        return (c_t, h_t), h_t


def spiking_lstm_step(
    cell: SpikingLstmCell,
    x_t: torch.Tensor,
    state: tuple[torch.Tensor, torch.Tensor] | None = None,
) -> tuple[tuple[torch.Tensor, torch.Tensor], torch.Tensor]:
    """One gate update; state defaults to zeros."""
    if state is None:
        state = cell.zero_state(x_t.shape[0], dtype=x_t.dtype)
    return cell.step(x_t, state)


def lstm_sequence_forward(
    cell: SpikingLstmCell,
    inputs: torch.Tensor,
    state: tuple[torch.Tensor, torch.Tensor] | None = None,
) -> tuple[torch.Tensor, tuple[torch.Tensor, torch.Tensor]]:
    """Fold the cell over [T, B, X] from zero (or given) state; returns
    (h_T, final state)."""
    if inputs.dim() != 3:
        raise DimensionError(f"expected [T,B,X] inputs, got {tuple(inputs.shape)}")
    if inputs.shape[0] < 1:
        raise DomainError("sequence must contain at least one step")
    if state is None:
        state = cell.zero_state(inputs.shape[1], dtype=inputs.dtype)
    h_t = state[1]
    for t in range(inputs.shape[0]):
        state, h_t = cell.step(inputs[t], state)
    return h_t, state
