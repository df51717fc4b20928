"""From-scratch spiking-network engine: LIF dynamics, encoders, layers and
surrogate-gradient training."""

from .encoding import SpikeTrain, constant_current, poisson_encode, ttfs_encode
from .layers import (
    CurrentAvgPool,
    FlattenSpace,
    MembraneReadout,
    SignedSpikingConv2d,
    SpikingConv2d,
    SpikingDense,
    SynapseWeights,
    conv_spiking_forward,
    direct_encode_layer,
    pool_spiking,
)
from .network import SpikingSequential
from .neuron import (
    LifParams,
    LifState,
    SignedNeuronParams,
    lif_readout_step,
    lif_step,
    membrane_readout,
    signed_lif_step,
)
from .surrogate import SurrogateConfig, spike_fn
from .training import (
    finite_difference_grads,
    mse_rate_loss,
    mse_readout_loss,
    surrogate_grad_bptt,
)

__all__ = [
    "SpikeTrain",
    "constant_current",
    "poisson_encode",
    "ttfs_encode",
    "CurrentAvgPool",
    "FlattenSpace",
    "MembraneReadout",
    "SignedSpikingConv2d",
    "SpikingConv2d",
    "SpikingDense",
    "SynapseWeights",
    "conv_spiking_forward",
    "direct_encode_layer",
    "pool_spiking",
    "SpikingSequential",
    "LifParams",
    "LifState",
    "SignedNeuronParams",
    "lif_readout_step",
    "lif_step",
    "membrane_readout",
    "signed_lif_step",
    "SurrogateConfig",
    "spike_fn",
    "finite_difference_grads",
    "mse_rate_loss",
    "mse_readout_loss",
    "surrogate_grad_bptt",
]
