"""Surrogate-gradient training: BPTT through the spiking graph.

The backward pass substitutes the boxcar pseudo-derivative at spike nodes
(see surrogate.py) and follows the exact chain rule elsewhere, including
reset products and readout integration.
"""

from __future__ import annotations

from collections.abc import Callable

import torch
from torch import nn

from ..errors import NumericError


def mse_readout_loss(output: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    """Mean-squared error on membrane-readout outputs (regression)."""
    return ((output - target) ** 2).mean()


def mse_rate_loss(train, target: torch.Tensor) -> torch.Tensor:
    """Mean-squared error on spike rates (classification-style targets)."""
    return ((train.rate() - target) ** 2).mean()


def surrogate_grad_bptt(
    network: nn.Module,
    inputs,
    target: torch.Tensor,
    loss_fn: Callable = mse_readout_loss,
    *,
    step: int | None = None,
) -> tuple[float, dict[str, torch.Tensor]]:
    """Forward + backward through time; returns (loss, gradients by name).

    Deterministic for fixed inputs/parameters: the unroll order is the data
    order and reductions run in torch's fixed CPU order.
    """
    network.zero_grad(set_to_none=True)
    try:
        output = network(inputs)
    except NumericError as err:
        if step is not None and err.step is None:
            raise NumericError(str(err), step=step) from err
        raise
    loss = loss_fn(output, target)
    if not torch.isfinite(loss):
        raise NumericError("non-finite training loss", step=step)
    loss.backward()
    grads = {
        name: p.grad.detach().clone()
        for name, p in network.named_parameters()
        if p.grad is not None
    }
    return float(loss.detach()), grads


def finite_difference_grads(
    network: nn.Module,
    inputs,
    target: torch.Tensor,
    loss_fn: Callable = mse_readout_loss,
    h: float = 1e-4,
) -> dict[str, torch.Tensor]:
    """Central finite differences of the (smooth-mode) forward pass.

    Independent route used to validate BPTT; O(2 * n_params) forward passes.
    """
    grads: dict[str, torch.Tensor] = {}
    with torch.no_grad():
        for name, p in network.named_parameters():
            g = torch.zeros_like(p)
            flat = p.view(-1)
            gflat = g.view(-1)
            for i in range(flat.numel()):
                orig = flat[i].item()
                flat[i] = orig + h
                lp = loss_fn(network(inputs), target).item()
                flat[i] = orig - h
                lm = loss_fn(network(inputs), target).item()
                flat[i] = orig
                gflat[i] = (lp - lm) / (2.0 * h)
            grads[name] = g
    return grads
